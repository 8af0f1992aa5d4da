#include "reqgen/sampling.hpp"

#include <cmath>
#include <numeric>

namespace reqgen {

namespace {

inline std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

// SplitMix64 finalizer: full avalanche of one 64-bit word.
inline std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace

std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ULL;
    return mix64(state);
}

Rng::Rng(std::uint64_t seed) {
    // Seed expansion per the xoshiro authors' recommendation.
    std::uint64_t sm = seed;
    for (auto& w : s_) w = splitmix64(sm);
}

Rng Rng::derive(std::uint64_t seed, std::uint64_t stream_index) {
    // Distinct (seed, index) pairs map to distinct root seeds via the
    // SplitMix64 finalizer; index 0 is not the same stream as Rng(seed).
    std::uint64_t sm = seed;
    std::uint64_t h = mix64(splitmix64(sm) ^ (stream_index + 1) * 0x9E3779B97F4A7C15ULL);
    return Rng(h);
}

std::uint64_t Rng::next_u64() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
}

double Rng::next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double Rng::next_open() {
    double u;
    do {
        u = next_double();
    } while (u == 0.0);
    return u;
}

PdfFamily pdf_family_from_name(const std::string& name) {
    if (name == "uniform") return PdfFamily::uniform;
    if (name == "normal") return PdfFamily::normal;
    if (name == "expon") return PdfFamily::expon;
    if (name == "cauchy") return PdfFamily::cauchy;
    if (name == "gamma") return PdfFamily::gamma;
    if (name == "lognorm") return PdfFamily::lognorm;
    if (name == "gilbrat") return PdfFamily::gilbrat;
    if (name == "powerlaw") return PdfFamily::powerlaw;
    if (name == "wald") return PdfFamily::wald;
    fail(Errc::invalid_params, "unknown pdf family '" + name + "'");
}

const char* pdf_family_name(PdfFamily f) {
    switch (f) {
        case PdfFamily::uniform: return "uniform";
        case PdfFamily::normal: return "normal";
        case PdfFamily::expon: return "expon";
        case PdfFamily::cauchy: return "cauchy";
        case PdfFamily::gamma: return "gamma";
        case PdfFamily::lognorm: return "lognorm";
        case PdfFamily::gilbrat: return "gilbrat";
        case PdfFamily::powerlaw: return "powerlaw";
        case PdfFamily::wald: return "wald";
    }
    return "?";
}

void validate_pdf(const PdfSpec& spec) {
    if (!std::isfinite(spec.loc) || !std::isfinite(spec.scale))
        fail(Errc::invalid_params, "pdf loc/scale must be finite");
    if (spec.scale < 0.0) fail(Errc::invalid_params, "pdf scale must be >= 0");
    const bool needs_aux = spec.family == PdfFamily::gamma || spec.family == PdfFamily::lognorm ||
                           spec.family == PdfFamily::powerlaw;
    if (needs_aux) {
        if (!spec.aux || *spec.aux <= 0.0)
            fail(Errc::invalid_params,
                 std::string(pdf_family_name(spec.family)) + " requires aux > 0");
    } else if (spec.aux) {
        fail(Errc::invalid_params,
             std::string(pdf_family_name(spec.family)) + " does not take aux");
    }
}

double inverse_normal_cdf(double p) {
    // Wichura, Algorithm AS 241 (PPND16).
    if (!(p > 0.0 && p < 1.0)) fail(Errc::invalid_params, "inverse_normal_cdf needs p in (0,1)");
    const double q = p - 0.5;
    double r;
    if (std::fabs(q) <= 0.425) {
        r = 0.180625 - q * q;
        return q *
               (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r +
                     6.7265770927008700853e4) * r + 4.5921953931549871457e4) * r +
                   1.3731693765509461125e4) * r + 1.9715909503065514427e3) * r +
                 1.3314166789178437745e2) * r + 3.3871328727963666080e0) /
               (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r +
                     3.9307895800092710610e4) * r + 2.1213794301586595867e4) * r +
                   5.3941960214247511077e3) * r + 6.8718700749205790830e2) * r +
                 4.2313330701600911252e1) * r + 1.0);
    }
    r = q < 0.0 ? p : 1.0 - p;
    r = std::sqrt(-std::log(r));
    double val;
    if (r <= 5.0) {
        r -= 1.6;
        val = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                    2.41780725177450611770e-1) * r + 1.27045825245236838258e0) * r +
                  3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r +
                4.63033784615654529590e0) * r + 1.42343711074968357734e0) /
              (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                    1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
                  6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r +
                2.05319162663775882187e0) * r + 1.0);
    } else {
        r -= 5.0;
        val = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                    1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
                  2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r +
                5.46378491116411436990e0) * r + 6.65790464350110377720e0) /
              (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                    1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
                  1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
                5.99832206555887937690e-1) * r + 1.0);
    }
    return q < 0.0 ? -val : val;
}

namespace {

double standard_normal(Rng& rng) { return inverse_normal_cdf(rng.next_open()); }

// Marsaglia & Tsang for shape >= 1; the Ahrens-Dieter boost handles shape < 1.
double standard_gamma(double shape, Rng& rng) {
    if (shape < 1.0) {
        const double u = rng.next_open();
        return standard_gamma(shape + 1.0, rng) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double z = standard_normal(rng);
        double v = 1.0 + c * z;
        if (v <= 0.0) continue;
        v = v * v * v;
        const double u = rng.next_open();
        if (u < 1.0 - 0.0331 * z * z * z * z) return d * v;
        if (std::log(u) < 0.5 * z * z + d * (1.0 - v + std::log(v))) return d * v;
    }
}

// Inverse Gaussian IG(1, 1) via Michael, Schucany & Haas.
double standard_wald(Rng& rng) {
    const double z = standard_normal(rng);
    const double y = z * z;
    const double x = 1.0 + 0.5 * (y - std::sqrt(4.0 * y + y * y));
    if (rng.next_double() <= 1.0 / (1.0 + x)) return x;
    return 1.0 / x;
}

}  // namespace

double sample_pdf(const PdfSpec& spec, Rng& rng) {
    validate_pdf(spec);
    switch (spec.family) {
        case PdfFamily::uniform: return spec.loc + spec.scale * rng.next_double();
        case PdfFamily::normal: return spec.loc + spec.scale * standard_normal(rng);
        case PdfFamily::expon: return spec.loc + spec.scale * -std::log(rng.next_open());
        case PdfFamily::cauchy: {
            const double u = rng.next_open();
            return spec.loc + spec.scale * std::tan(M_PI * (u - 0.5));
        }
        case PdfFamily::gamma: return spec.loc + spec.scale * standard_gamma(*spec.aux, rng);
        case PdfFamily::lognorm:
            return spec.loc + spec.scale * std::exp(*spec.aux * standard_normal(rng));
        case PdfFamily::gilbrat: return spec.loc + spec.scale * std::exp(standard_normal(rng));
        case PdfFamily::powerlaw:
            return spec.loc + spec.scale * std::pow(rng.next_double(), 1.0 / *spec.aux);
        case PdfFamily::wald: return spec.loc + spec.scale * standard_wald(rng);
    }
    fail(Errc::invalid_params, "unhandled pdf family");
}

std::size_t weighted_choice(std::size_t n, const std::vector<double>& weights, Rng& rng) {
    if (n == 0) fail(Errc::invalid_params, "weighted_choice over zero items");
    if (weights.empty()) {
        // Uniform over n items; the multiply-shift keeps it exact for n well
        // below 2^53.
        std::size_t i = static_cast<std::size_t>(rng.next_double() * static_cast<double>(n));
        return i >= n ? n - 1 : i;
    }
    if (weights.size() != n) fail(Errc::length_mismatch, "weights length does not match items");
    double total = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0)) fail(Errc::invalid_params, "weights must be non-negative");
        total += w;
    }
    if (total <= 0.0) fail(Errc::all_zero_weights, "all weights are zero");
    const double r = rng.next_double() * total;
    double cum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        cum += weights[i];
        if (r < cum && weights[i] > 0.0) return i;
    }
    // Floating-point edge: r landed on the top boundary; return the last item
    // with positive weight.
    for (std::size_t i = n; i-- > 0;)
        if (weights[i] > 0.0) return i;
    fail(Errc::all_zero_weights, "all weights are zero");
}

}  // namespace reqgen
