#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace debthmm {

/// Deterministic random source used by the simulator and by EM
/// initialization.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the
/// standard. Substreams are keyed by (seed, domain tag, stream id) through
/// std::seed_seq, which is also fully specified. All distribution
/// transforms are implemented here rather than taken from <random>, whose
/// distributions are implementation-defined, so sequences match across
/// standard libraries.
class Rng {
public:
  /// Stream domains keep e.g. case 3 of a cohort and restart 3 of a fit
  /// from sharing a sequence.
  enum class Domain : std::uint32_t {
    kCase = 1,
    kEconomicPath = 2,
    kRestart = 3,
    kTest = 99,
  };

  Rng(std::uint64_t seed, Domain domain, std::uint64_t stream);

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();

  /// Uniform integer on [0, n). n must be positive.
  std::uint64_t uniform_int(std::uint64_t n);

  /// Index drawn with probability proportional to `weights`.
  std::size_t categorical(std::span<const double> weights);

  double normal();

  /// Gamma(shape, 1) via Marsaglia-Tsang.
  double gamma(double shape);

  /// Symmetric Dirichlet(concentration) of dimension k.
  std::vector<double> dirichlet(std::size_t k, double concentration);

private:
  std::mt19937_64 engine_;
};

}  // namespace debthmm
