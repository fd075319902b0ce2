#include "repdis/guidance.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include "repdis/rng.hpp"

namespace repdis {

void OptimizerSettings::validate() const {
  if (!(learning_rate > 0.0)) throw InvalidArgumentError("learning_rate must be > 0");
  if (!(beta1 > 0.0 && beta1 < 1.0)) throw InvalidArgumentError("beta1 must be in (0, 1)");
  if (!(beta2 > 0.0 && beta2 < 1.0)) throw InvalidArgumentError("beta2 must be in (0, 1)");
  if (!(epsilon > 0.0)) throw InvalidArgumentError("epsilon must be > 0");
  if (convergence_window < 1) throw InvalidArgumentError("convergence_window must be >= 1");
  if (!(convergence_rel_tol >= 0.0)) throw InvalidArgumentError("convergence_rel_tol must be >= 0");
  if (gradient_clip && !(*gradient_clip > 0.0)) {
    throw InvalidArgumentError("gradient_clip must be > 0 when set");
  }
}

void GuidanceProblem::validate() const {
  if (!generator || !encoder) throw InvalidArgumentError("guidance needs a generator and an encoder");
  if (generator->out_dim() != encoder->in_dim()) {
    throw DimensionError("generator output " + to_string(generator->out_shape()) +
                         " does not match encoder input " + to_string(encoder->in_shape()));
  }
  require_same_dim(encoder->out_dim(), target.vector.dim(), "encoder output vs target");
  require_same_dim(init.z.size(), generator->in_dim(), "initial latent vs generator input");
  for (double v : init.z) {
    if (!std::isfinite(v)) throw NumericalError("initial latent has a non-finite entry");
  }
  policy.validate(generator->out_shape());
  optimizer.validate();
}

std::string to_string(Termination t) {
  switch (t) {
    case Termination::Converged: return "converged";
    case Termination::MaxSteps: return "max_steps";
    case Termination::Error: return "error";
  }
  return "unknown";
}

LatentState init_from_input(const DifferentiableMap& generator_inverse,
                            std::span<const double> x_input) {
  if (x_input.size() != generator_inverse.in_dim()) {
    throw DimensionError("input of size " + std::to_string(x_input.size()) +
                         " does not match " + generator_inverse.name() + " input " +
                         to_string(generator_inverse.in_shape()));
  }
  return LatentState{generator_inverse.forward(x_input), 0, {}, {}};
}

LatentState random_init(std::size_t latent_dim, std::uint64_t seed) {
  auto rng = derive_stream(seed, {0x696e6974ULL});
  std::normal_distribution<double> normal(0.0, 1.0);
  LatentState s;
  s.z.resize(latent_dim);
  for (auto& v : s.z) v = normal(rng);
  return s;
}

AveragedGradient latent_gradient(const GuidanceProblem& problem, std::span<const double> z,
                                 std::uint64_t step) {
  const auto image = problem.generator->forward(z);
  auto g = averaged_objective_gradient(problem.policy, problem.generator->out_shape(), image,
                                       *problem.encoder, problem.target, step,
                                       problem.include_clean);
  g.gradient = problem.generator->vjp(z, g.gradient);
  return g;
}

double objective(const GuidanceProblem& problem, std::span<const double> z, std::uint64_t step) {
  const auto image = problem.generator->forward(z);
  const auto shape = problem.generator->out_shape();
  const auto t = problem.target.vector.values();
  if (problem.policy.is_identity()) {
    return cosine_similarity(problem.encoder->forward(image), t);
  }
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t k = 0; k < problem.policy.samples_per_step; ++k, ++n) {
    auto rng = augmentation_stream(problem.policy, step, k);
    const auto draw = draw_augmentation(problem.policy, shape, rng);
    sum += cosine_similarity(problem.encoder->forward(apply_augmentation(draw, shape, image)), t);
  }
  if (problem.include_clean) {
    sum += cosine_similarity(problem.encoder->forward(image), t);
    ++n;
  }
  return sum / static_cast<double>(n);
}

double clean_objective(const GuidanceProblem& problem, std::span<const double> z) {
  return cosine_similarity(problem.encoder->forward(problem.generator->forward(z)),
                           problem.target.vector.values());
}

StepResult step(const GuidanceProblem& problem, const LatentState& state) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto& opt = problem.optimizer;
  const std::size_t n = state.z.size();

  auto grad = latent_gradient(problem, state.z, state.step);
  double norm2 = 0.0;
  for (double g : grad.gradient) norm2 += g * g;
  double grad_norm = std::sqrt(norm2);
  if (!std::isfinite(grad_norm)) {
    std::ostringstream msg;
    msg << "non-finite gradient at step " << state.step << " (grad-norm " << grad_norm << ")";
    throw NumericalError(msg.str());
  }
  if (opt.gradient_clip && grad_norm > *opt.gradient_clip) {
    const double s = *opt.gradient_clip / grad_norm;
    for (auto& g : grad.gradient) g *= s;
  }

  StepResult out;
  LatentState& next = out.state;
  next.z = state.z;
  next.step = state.step + 1;
  next.first_moment = state.first_moment.empty() ? std::vector<double>(n, 0.0) : state.first_moment;
  next.second_moment =
      state.second_moment.empty() ? std::vector<double>(n, 0.0) : state.second_moment;

  const double t = static_cast<double>(next.step);
  const double bias1 = 1.0 - std::pow(opt.beta1, t);
  const double bias2 = 1.0 - std::pow(opt.beta2, t);
  for (std::size_t i = 0; i < n; ++i) {
    const double g = grad.gradient[i];
    next.first_moment[i] = opt.beta1 * next.first_moment[i] + (1.0 - opt.beta1) * g;
    next.second_moment[i] = opt.beta2 * next.second_moment[i] + (1.0 - opt.beta2) * g * g;
    const double m_hat = next.first_moment[i] / bias1;
    const double v_hat = next.second_moment[i] / bias2;
    next.z[i] -= opt.learning_rate * m_hat / (std::sqrt(v_hat) + opt.epsilon);
  }

  // The augmented mean is noisy across steps; report the clean cosine so the
  // convergence test sees a smooth sequence. Identical under an identity policy.
  const double reported =
      problem.policy.is_identity() ? grad.objective : clean_objective(problem, state.z);
  const auto t1 = std::chrono::steady_clock::now();
  out.record = TraceRecord{state.step, reported, grad_norm,
                           std::chrono::duration<double, std::milli>(t1 - t0).count()};
  return out;
}

GuidanceTrace run(const GuidanceProblem& problem) {
  problem.validate();
  const auto& opt = problem.optimizer;
  GuidanceTrace trace;
  trace.last_state = problem.init;
  trace.final_state = problem.init;
  std::vector<double> best_history;  // best objective after each step
  double best = -2.0;

  while (trace.records.size() < opt.max_steps) {
    StepResult r;
    try {
      r = step(problem, trace.last_state);
    } catch (const NumericalError& e) {
      trace.termination = Termination::Error;
      throw GuidanceFailure(e.what(), std::move(trace));
    }
    // record.objective scores the state the step started from.
    if (r.record.objective > best) {
      best = r.record.objective;
      trace.final_state = trace.last_state;
    }
    best_history.push_back(best);
    trace.records.push_back(r.record);
    trace.last_state = std::move(r.state);

    const std::size_t done = best_history.size();
    if (done > opt.convergence_window) {
      const double before = best_history[done - 1 - opt.convergence_window];
      const double gain = (best - before) / std::max(std::abs(before), 1e-12);
      if (gain < opt.convergence_rel_tol) {
        trace.termination = Termination::Converged;
        break;
      }
    }
  }
  if (trace.termination != Termination::Converged) trace.termination = Termination::MaxSteps;
  const double last = clean_objective(problem, trace.last_state.z);
  if (trace.records.empty() || last > best) {
    trace.final_state = trace.last_state;
    best = std::max(best, last);
  }
  trace.best_objective = best;
  trace.final_objective = clean_objective(problem, trace.final_state.z);
  return trace;
}

}  // namespace repdis
