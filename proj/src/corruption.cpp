#include "rhm/corruption.hpp"

#include <string>

#include "rhm/error.hpp"

namespace rhm {

NoiseSpec NoiseSpec::Cumulative(NoiseKind kind, double beta_bar) {
  NoiseSpec spec;
  spec.kind = kind;
  spec.beta_bar = beta_bar;
  spec.Validate();
  return spec;
}

NoiseSpec NoiseSpec::Scheduled(NoiseKind kind, std::vector<double> betas) {
  NoiseSpec spec;
  spec.kind = kind;
  spec.schedule = std::move(betas);
  spec.Validate();
  return spec;
}

void NoiseSpec::Validate() const {
  Require(!(beta_bar && !schedule.empty()), ErrorCode::kInvalidArgument,
          "noise spec takes either a schedule or beta_bar, not both");
  if (beta_bar) {
    Require(*beta_bar >= 0.0 && *beta_bar <= 1.0, ErrorCode::kInvalidArgument,
            "beta_bar must lie in [0, 1]");
  }
  for (double b : schedule) {
    Require(b >= 0.0 && b <= 1.0, ErrorCode::kInvalidArgument,
            "every beta_t must lie in [0, 1]");
  }
}

std::vector<double> LinearSchedule(int steps, double beta_start, double beta_end) {
  Require(steps >= 1, ErrorCode::kInvalidArgument, "schedule needs T >= 1");
  std::vector<double> betas(steps);
  for (int t = 0; t < steps; ++t) {
    const double frac = steps == 1 ? 1.0 : static_cast<double>(t) / (steps - 1);
    betas[t] = beta_start + (beta_end - beta_start) * frac;
  }
  return betas;
}

double CumulativeKeepProb(const NoiseSpec& spec) {
  if (spec.beta_bar) return 1.0 - *spec.beta_bar;
  double keep = 1.0;
  for (double b : spec.schedule) keep *= 1.0 - b;
  return keep;
}

namespace {

void CheckTokens(std::span<const Symbol> x, int vocab) {
  for (Symbol t : x) {
    Require(t >= 0 && t < vocab, ErrorCode::kInvalidArgument,
            "token out of range for corruption");
  }
}

// Applies one kernel with hit probability `beta` in place.
void ApplyKernel(std::vector<Symbol>& tokens, std::vector<bool>& hit, int vocab,
                 NoiseKind kind, double beta, Rng& rng) {
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (!rng.Bernoulli(beta)) continue;
    hit[i] = true;
    tokens[i] = kind == NoiseKind::kMasking
                    ? vocab
                    : static_cast<Symbol>(rng.Below(static_cast<std::uint64_t>(vocab)));
  }
}

}  // namespace

Corrupted Corrupt(std::span<const Symbol> x, int vocab, const NoiseSpec& spec,
                  Rng& rng) {
  spec.Validate();
  CheckTokens(x, vocab);
  Corrupted out{{x.begin(), x.end()}, std::vector<bool>(x.size(), false)};
  ApplyKernel(out.tokens, out.hit, vocab, spec.kind, 1.0 - CumulativeKeepProb(spec),
              rng);
  return out;
}

Corrupted CorruptTrajectory(std::span<const Symbol> x, int vocab,
                            const NoiseSpec& spec, Rng& rng) {
  spec.Validate();
  CheckTokens(x, vocab);
  Corrupted out{{x.begin(), x.end()}, std::vector<bool>(x.size(), false)};
  if (spec.beta_bar) {
    ApplyKernel(out.tokens, out.hit, vocab, spec.kind, *spec.beta_bar, rng);
    return out;
  }
  for (double beta : spec.schedule) {
    // A masked token is absorbing.
    if (spec.kind == NoiseKind::kMasking) {
      for (std::size_t i = 0; i < out.tokens.size(); ++i) {
        if (!out.hit[i] && rng.Bernoulli(beta)) {
          out.hit[i] = true;
          out.tokens[i] = vocab;
        }
      }
    } else {
      ApplyKernel(out.tokens, out.hit, vocab, spec.kind, beta, rng);
    }
  }
  return out;
}

LeafLikelihoods ComputeLeafLikelihoods(std::span<const Symbol> noisy, int vocab,
                                       const NoiseSpec& spec) {
  spec.Validate();
  LeafLikelihoods out;
  out.length = noisy.size();
  out.vocab = vocab;
  out.values.assign(noisy.size() * vocab, 0.0);
  const double keep = CumulativeKeepProb(spec);
  for (std::size_t i = 0; i < noisy.size(); ++i) {
    const Symbol obs = noisy[i];
    auto row = out.At(i);
    if (spec.kind == NoiseKind::kMasking) {
      Require(obs >= 0 && obs <= vocab, ErrorCode::kInvalidArgument,
              "observed symbol " + std::to_string(obs) + " out of range");
      if (obs == vocab) {
        for (auto& w : row) w = 1.0;
      } else {
        row[obs] = 1.0;
      }
    } else {
      Require(obs >= 0 && obs < vocab, ErrorCode::kInvalidArgument,
              "observed symbol " + std::to_string(obs) + " out of range");
      const double off = (1.0 - keep) / vocab;
      for (auto& w : row) w = off;
      row[obs] = keep + off;
    }
  }
  return out;
}

LeafLikelihoods CleanLikelihoods(std::span<const Symbol> x, int vocab) {
  return ComputeLeafLikelihoods(x, vocab, NoiseSpec::Cumulative(NoiseKind::kMasking, 0.0));
}

}  // namespace rhm
