#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "reqgen/errors.hpp"

namespace reqgen {

// Deterministic 64-bit generator: xoshiro256++ (Blackman & Vigna), state
// seeded with SplitMix64. The same seed yields the same stream on every
// platform; replica streams are derived from (seed, stream index) so they can
// run concurrently without sharing state.
class Rng {
  public:
    explicit Rng(std::uint64_t seed);

    // Independent stream for the given index under the same root seed.
    static Rng derive(std::uint64_t seed, std::uint64_t stream_index);

    std::uint64_t next_u64();

    // Uniform double in [0, 1) with 53 bits of precision.
    double next_double();

    // Uniform double in (0, 1) — never exactly zero, for log transforms.
    double next_open();

  private:
    std::uint64_t s_[4];
};

// SplitMix64 step: advances the state and returns the next output.
std::uint64_t splitmix64(std::uint64_t& state);

enum class PdfFamily {
    uniform,
    normal,
    expon,
    cauchy,
    gamma,
    lognorm,
    gilbrat,
    powerlaw,
    wald,
};

// Parsed distribution spec: family plus loc/scale and an optional shape
// parameter (aux). Validation rules:
//   - scale >= 0 (zero collapses the draw to a constant),
//   - gamma/lognorm/powerlaw require aux > 0,
//   - every other family rejects aux.
struct PdfSpec {
    PdfFamily family = PdfFamily::uniform;
    double loc = 0.0;
    double scale = 1.0;
    std::optional<double> aux;
};

PdfFamily pdf_family_from_name(const std::string& name);
const char* pdf_family_name(PdfFamily f);

// Throws Errc::invalid_params if the spec violates the rules above.
void validate_pdf(const PdfSpec& spec);

// One draw from the distribution. All families are loc/scale transforms of a
// standard variate:
//   uniform  : loc + scale * U          (support [loc, loc+scale])
//   normal   : loc + scale * Z
//   expon    : loc + scale * E          (E standard exponential)
//   cauchy   : loc + scale * C
//   gamma    : loc + scale * G(aux)
//   lognorm  : loc + scale * exp(aux * Z)
//   gilbrat  : lognorm with aux = 1
//   powerlaw : loc + scale * U^(1/aux)  (support [loc, loc+scale])
//   wald     : loc + scale * IG(1, 1)
double sample_pdf(const PdfSpec& spec, Rng& rng);

// Index in [0, n) with probability weights[i] / sum(weights); uniform when
// `weights` is empty. Throws Errc::length_mismatch when a non-empty weight
// vector has the wrong length, Errc::all_zero_weights when nothing can be
// drawn, Errc::invalid_params on negative weights or n == 0.
std::size_t weighted_choice(std::size_t n, const std::vector<double>& weights, Rng& rng);

// Inverse of the standard normal CDF (Wichura's AS 241, ~1e-16 accurate).
// Exposed for tests; sample_pdf uses it for every normal deviate so the draw
// count per call stays fixed.
double inverse_normal_cdf(double p);

}  // namespace reqgen
