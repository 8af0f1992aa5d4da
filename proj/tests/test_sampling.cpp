#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "reqgen/errors.hpp"
#include "reqgen/sampling.hpp"

using namespace reqgen;

namespace {

// Independent re-transcription of the published xoshiro256++ and SplitMix64
// algorithms, kept separate from the library implementation on purpose: the
// two must agree output-for-output.
struct RefXoshiro {
    std::uint64_t s[4];

    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    static std::uint64_t ref_splitmix(std::uint64_t& x) {
        std::uint64_t z = (x += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    explicit RefXoshiro(std::uint64_t seed) {
        std::uint64_t sm = seed;
        for (auto& w : s) w = ref_splitmix(sm);
    }

    std::uint64_t next() {
        const std::uint64_t result = rotl(s[0] + s[3], 23) + s[0];
        const std::uint64_t t = s[1] << 17;
        s[2] ^= s[0];
        s[3] ^= s[1];
        s[1] ^= s[2];
        s[0] ^= s[3];
        s[2] ^= t;
        s[3] = rotl(s[3], 45);
        return result;
    }
};

double sample_mean(const std::vector<double>& xs) {
    double sum = 0.0;
    for (double x : xs) sum += x;
    return sum / static_cast<double>(xs.size());
}

double sample_std(const std::vector<double>& xs) {
    const double m = sample_mean(xs);
    double ss = 0.0;
    for (double x : xs) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(xs.size()));
}

std::vector<double> draw(const PdfSpec& spec, std::uint64_t seed, std::size_t count) {
    Rng rng(seed);
    std::vector<double> out(count);
    for (double& x : out) x = sample_pdf(spec, rng);
    return out;
}

// Kolmogorov-Smirnov statistic against uniform on [0, 1).
double ks_uniform(std::vector<double> xs) {
    std::sort(xs.begin(), xs.end());
    const double n = static_cast<double>(xs.size());
    double d = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        d = std::max(d, std::abs((static_cast<double>(i) + 1.0) / n - xs[i]));
        d = std::max(d, std::abs(xs[i] - static_cast<double>(i) / n));
    }
    return d;
}

}  // namespace

TEST_CASE("splitmix64 matches the published first output for state zero") {
    std::uint64_t state = 0;
    CHECK(splitmix64(state) == 0xE220A8397B1DCDAFULL);
}

TEST_CASE("xoshiro256++ stream matches an independent transcription") {
    for (std::uint64_t seed : {0ULL, 1ULL, 42ULL, 0xDEADBEEFULL, ~0ULL}) {
        Rng rng(seed);
        RefXoshiro ref(seed);
        for (int i = 0; i < 1000; ++i) CHECK(rng.next_u64() == ref.next());
    }
}

TEST_CASE("next_double lies in [0,1) and next_open in (0,1)") {
    Rng rng(7);
    for (int i = 0; i < 10000; ++i) {
        const double u = rng.next_double();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
    }
    Rng rng2(7);
    for (int i = 0; i < 10000; ++i) {
        const double u = rng2.next_open();
        CHECK(u > 0.0);
        CHECK(u < 1.0);
    }
}

TEST_CASE("derived streams are deterministic and distinct") {
    Rng a = Rng::derive(99, 1);
    Rng b = Rng::derive(99, 1);
    Rng c = Rng::derive(99, 2);
    Rng root(99);
    bool all_equal_c = true, all_equal_root = true;
    for (int i = 0; i < 64; ++i) {
        const std::uint64_t va = a.next_u64();
        CHECK(va == b.next_u64());
        all_equal_c = all_equal_c && va == c.next_u64();
        all_equal_root = all_equal_root && va == root.next_u64();
    }
    CHECK_FALSE(all_equal_c);
    CHECK_FALSE(all_equal_root);
}

TEST_CASE("inverse normal cdf hits reference quantiles") {
    CHECK(inverse_normal_cdf(0.5) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(inverse_normal_cdf(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-9));
    CHECK(inverse_normal_cdf(0.025) == doctest::Approx(-1.959963984540054).epsilon(1e-9));
    CHECK(inverse_normal_cdf(0.841344746068543) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(inverse_normal_cdf(1e-10) == doctest::Approx(-6.361340902404056).epsilon(1e-6));
}

TEST_CASE("pdf validation enforces the family rules") {
    PdfSpec spec;
    spec.family = PdfFamily::uniform;
    spec.scale = -1.0;
    CHECK_THROWS_AS(validate_pdf(spec), Error);

    spec.scale = 0.0;  // constant draw is legal
    CHECK_NOTHROW(validate_pdf(spec));

    spec.scale = 1.0;
    spec.aux = 2.0;  // uniform takes no shape parameter
    CHECK_THROWS_AS(validate_pdf(spec), Error);

    spec.family = PdfFamily::gamma;  // gamma requires one
    CHECK_NOTHROW(validate_pdf(spec));
    spec.aux.reset();
    CHECK_THROWS_AS(validate_pdf(spec), Error);
    spec.aux = -1.0;
    CHECK_THROWS_AS(validate_pdf(spec), Error);

    spec.family = PdfFamily::lognorm;
    spec.aux.reset();
    CHECK_THROWS_AS(validate_pdf(spec), Error);
    spec.family = PdfFamily::gilbrat;  // fixed shape, no aux
    CHECK_NOTHROW(validate_pdf(spec));
}

TEST_CASE("zero scale collapses every family to its loc") {
    for (PdfFamily family : {PdfFamily::uniform, PdfFamily::normal, PdfFamily::expon,
                             PdfFamily::cauchy, PdfFamily::wald}) {
        PdfSpec spec;
        spec.family = family;
        spec.loc = 123.5;
        spec.scale = 0.0;
        Rng rng(3);
        for (int i = 0; i < 10; ++i) CHECK(sample_pdf(spec, rng) == 123.5);
    }
}

TEST_CASE("uniform draws stay in [loc, loc+scale] and look uniform") {
    PdfSpec spec;
    spec.family = PdfFamily::uniform;
    spec.loc = 10.0;
    spec.scale = 5.0;
    const auto xs = draw(spec, 11, 10000);
    std::vector<double> unit;
    for (double x : xs) {
        CHECK(x >= 10.0);
        CHECK(x < 15.0);
        unit.push_back((x - 10.0) / 5.0);
    }
    CHECK(ks_uniform(unit) < 0.02);  // ~alpha 0.001 at n=10000
}

TEST_CASE("normal draws have the requested moments") {
    PdfSpec spec;
    spec.family = PdfFamily::normal;
    spec.loc = 3.0;
    spec.scale = 2.0;
    const auto xs = draw(spec, 12, 100000);
    CHECK(sample_mean(xs) == doctest::Approx(3.0).epsilon(0.01));
    CHECK(sample_std(xs) == doctest::Approx(2.0).epsilon(0.01));
}

TEST_CASE("exponential draws have mean loc + scale") {
    PdfSpec spec;
    spec.family = PdfFamily::expon;
    spec.loc = 1.0;
    spec.scale = 4.0;
    const auto xs = draw(spec, 13, 100000);
    for (double x : xs) CHECK(x >= 1.0);
    CHECK(sample_mean(xs) == doctest::Approx(5.0).epsilon(0.02));
}

TEST_CASE("gamma draws have mean loc + scale*aux and matching variance") {
    PdfSpec spec;
    spec.family = PdfFamily::gamma;
    spec.loc = 0.0;
    spec.scale = 2.0;
    spec.aux = 3.0;
    const auto xs = draw(spec, 14, 100000);
    CHECK(sample_mean(xs) == doctest::Approx(6.0).epsilon(0.02));
    // var = aux * scale^2 = 12
    CHECK(sample_std(xs) == doctest::Approx(std::sqrt(12.0)).epsilon(0.03));
}

TEST_CASE("lognorm and gilbrat agree when aux is one") {
    PdfSpec ln;
    ln.family = PdfFamily::lognorm;
    ln.loc = 0.5;
    ln.scale = 2.0;
    ln.aux = 1.0;
    PdfSpec gb;
    gb.family = PdfFamily::gilbrat;
    gb.loc = 0.5;
    gb.scale = 2.0;
    Rng a(15), b(15);
    for (int i = 0; i < 1000; ++i) CHECK(sample_pdf(ln, a) == sample_pdf(gb, b));
}

TEST_CASE("powerlaw draws stay in [loc, loc+scale] with the right mean") {
    PdfSpec spec;
    spec.family = PdfFamily::powerlaw;
    spec.loc = 0.0;
    spec.scale = 1.0;
    spec.aux = 3.0;
    const auto xs = draw(spec, 16, 100000);
    for (double x : xs) {
        CHECK(x >= 0.0);
        CHECK(x <= 1.0);
    }
    // mean of U^(1/3)... E[X] = a/(a+1) = 0.75 for the standard powerlaw
    CHECK(sample_mean(xs) == doctest::Approx(0.75).epsilon(0.01));
}

TEST_CASE("wald draws are positive with mean loc + scale") {
    PdfSpec spec;
    spec.family = PdfFamily::wald;
    spec.loc = 0.0;
    spec.scale = 2.0;
    const auto xs = draw(spec, 17, 100000);
    for (double x : xs) CHECK(x > 0.0);
    CHECK(sample_mean(xs) == doctest::Approx(2.0).epsilon(0.02));
}

TEST_CASE("cauchy median sits at loc") {
    PdfSpec spec;
    spec.family = PdfFamily::cauchy;
    spec.loc = 7.0;
    spec.scale = 1.5;
    auto xs = draw(spec, 18, 100001);
    std::nth_element(xs.begin(), xs.begin() + xs.size() / 2, xs.end());
    CHECK(xs[xs.size() / 2] == doctest::Approx(7.0).epsilon(0.02));
}

TEST_CASE("weighted choice follows the weights") {
    Rng rng(19);
    std::vector<std::size_t> counts(2, 0);
    for (int i = 0; i < 10000; ++i) ++counts[weighted_choice(2, {9.0, 1.0}, rng)];
    CHECK(counts[0] >= 8800);
    CHECK(counts[0] <= 9200);

    // Empty weight vector means uniform.
    std::vector<std::size_t> uni(4, 0);
    for (int i = 0; i < 10000; ++i) ++uni[weighted_choice(4, {}, rng)];
    for (std::size_t c : uni) {
        CHECK(c > 2200);
        CHECK(c < 2800);
    }

    // Zero-weight entries are never drawn.
    for (int i = 0; i < 1000; ++i) CHECK(weighted_choice(3, {0.0, 1.0, 0.0}, rng) == 1);
}

TEST_CASE("weighted choice rejects bad inputs") {
    Rng rng(20);
    CHECK_THROWS_AS(weighted_choice(0, {}, rng), Error);
    CHECK_THROWS_AS(weighted_choice(2, {1.0}, rng), Error);
    CHECK_THROWS_AS(weighted_choice(2, {1.0, -0.5}, rng), Error);
    CHECK_THROWS_AS(weighted_choice(2, {0.0, 0.0}, rng), Error);
}
