#pragma once

// Latent optimisation that steers a generator's output toward a target
// embedding by maximising cosine similarity through the encoder, with the
// gradient averaged over random image perturbations.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "repdis/augment.hpp"
#include "repdis/differentiable_map.hpp"
#include "repdis/embedding.hpp"
#include "repdis/error.hpp"

namespace repdis {

/// Adaptive-moment optimiser settings and stopping rule.
struct OptimizerSettings {
  double learning_rate = 0.05;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::size_t max_steps = 2000;
  std::size_t convergence_window = 25;
  double convergence_rel_tol = 1e-6;
  std::uint64_t seed = 0;
  std::optional<double> gradient_clip;  // max gradient norm; off by default

  void validate() const;
};

struct LatentState {
  std::vector<double> z;
  std::size_t step = 0;
  std::vector<double> first_moment;   // empty until the first update
  std::vector<double> second_moment;
};

struct GuidanceProblem {
  MapPtr generator;  // z -> image
  MapPtr encoder;    // image -> embedding
  TargetRepresentation target;
  AugmentationPolicy policy = AugmentationPolicy::identity();
  OptimizerSettings optimizer{};
  LatentState init;
  bool include_clean = false;  // also score the unperturbed image each step

  /// Checks the shape chain z -> generator -> encoder -> target.
  void validate() const;
};

struct TraceRecord {
  std::size_t step = 0;
  double objective = 0.0;  // clean cosine of z before the update
  double grad_norm = 0.0;  // norm of the latent gradient
  double millis = 0.0;     // wall time of the step
};

enum class Termination { Converged, MaxSteps, Error };
std::string to_string(Termination t);

struct GuidanceTrace {
  std::vector<TraceRecord> records;
  LatentState final_state;  // visited latent with the highest clean cosine
  LatentState last_state;   // latent after the last update
  Termination termination = Termination::MaxSteps;
  double final_objective = 0.0;  // clean cosine of final_state
  double best_objective = -1.0;  // highest recorded objective
};

/// Raised when an optimisation step produces a non-finite gradient.
class GuidanceFailure : public NumericalError {
public:
  GuidanceFailure(const std::string& detail, GuidanceTrace trace)
      : NumericalError(detail), trace_(std::move(trace)) {}
  const GuidanceTrace& trace() const noexcept { return trace_; }

private:
  GuidanceTrace trace_;
};

/// z = generator_inverse(x_input), step 0.
LatentState init_from_input(const DifferentiableMap& generator_inverse,
                            std::span<const double> x_input);
/// z ~ N(0, I).
LatentState random_init(std::size_t latent_dim, std::uint64_t seed);

/// Mean cosine similarity between encoder(perturbed generator(z)) and the
/// target, using the augmentation streams of `step`. An identity policy
/// gives the plain cosine.
double objective(const GuidanceProblem& problem, std::span<const double> z,
                 std::uint64_t step = 0);

/// Cosine of encoder(generator(z)) to the target with no perturbation.
double clean_objective(const GuidanceProblem& problem, std::span<const double> z);

/// Gradient of -objective with respect to z, and the objective itself.
AveragedGradient latent_gradient(const GuidanceProblem& problem, std::span<const double> z,
                                 std::uint64_t step);

struct StepResult {
  LatentState state;
  TraceRecord record;
};

/// One adaptive-moment update of z along the negated objective gradient.
/// Throws NumericalError on a non-finite gradient.
StepResult step(const GuidanceProblem& problem, const LatentState& state);

/// Iterates step() until the best objective stalls over the convergence
/// window or max_steps is reached.
GuidanceTrace run(const GuidanceProblem& problem);

}  // namespace repdis
