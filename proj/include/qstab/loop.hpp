#pragma once

#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include "qstab/channel.hpp"
#include "qstab/plant.hpp"
#include "qstab/quantizer.hpp"

namespace qstab {

// Prediction set for y_{k+1}: the Minkowski sum of the interval products
// A_i * Y_{k-i+1}. Estimates are newest-first (estimates[0] = Y_k).
Interval predict(std::span<const Interval> estimates, const ARUncertainty& u);

// sigma_{k+1} = width(Y-) + (2 delta / |b*|) |midpoint(Y-)|; the tightest
// scaling that keeps the quantizer unsaturated under the midpoint-cancelling
// input.
double scale_update(const Interval& prediction, const ARUncertainty& u);

// u = -midpoint(Y-) / b*.
double control(const Interval& prediction, double b_star);

// Scalar-case expansion factor of sigma for one step: |a*| + eps on loss,
// w_{l} of the hit cell on arrival. `cell` must be present iff gamma = 1.
double eta(int gamma, std::optional<int> cell, const Quantizer& q, const ScalarUncertainty& u);

// Estimator state machine shared by encoder and decoder. Both sides run this
// exact code on the same inputs (transmission result + ACK), which keeps
// their sigma streams bitwise identical.
class Codec {
 public:
  // initial_estimates = Y_{-n+1}..Y_0, oldest first; sets sigma_0 from Y_0.
  Codec(ARUncertainty u, Quantizer q, std::span<const Interval> initial_estimates);

  double sigma() const { return sigma_; }
  const Quantizer& quantizer() const { return quant_; }

  // Record the time-k transmission result: on arrival the estimate becomes
  // the scaled cell, on loss the full range [-sigma_k/2, sigma_k/2].
  void absorb(int gamma, int cell);

  // Compute u_k, the prediction set and sigma_{k+1}; shift the estimate
  // history. Returns u_k.
  double advance();

  const Interval& prediction() const { return prediction_; }
  const Interval& newest_estimate() const { return estimates_.front(); }
  std::span<const Interval> estimates() const { return estimates_; }  // newest first
  double last_input() const { return input_; }

  friend bool operator==(const Codec& a, const Codec& b) {
    return a.sigma_ == b.sigma_ && a.estimates_ == b.estimates_ &&
           a.prediction_ == b.prediction_ && a.input_ == b.input_;
  }

 private:
  ARUncertainty unc_;
  Quantizer quant_;
  std::vector<Interval> estimates_;  // newest first
  Interval prediction_;
  double sigma_;
  double input_ = 0.0;
};

struct StepRecord {
  long k = 0;
  int gamma = 1;
  double sigma = 0.0;  // sigma_k used for this transmission
  double y = 0.0;      // y_k
  double u = 0.0;      // u_k
  int cell = 0;        // transmitted cell index
  Interval estimate;   // decoder's Y_k
  double eta = 0.0;    // scalar case only, 0 otherwise
};

struct LoopConfig {
  ARUncertainty uncertainty;
  Quantizer quantizer;
  PerturbationMode policy = PerturbationMode::uniform_random;
  // Y_{-n+1}..Y_0 oldest first; must have positive width.
  std::vector<Interval> initial_intervals;
  // Matching initial outputs; empty means interval midpoints.
  std::vector<double> initial_outputs;

  static LoopConfig scalar(const ScalarUncertainty& u, Quantizer q,
                           PerturbationMode policy = PerturbationMode::uniform_random,
                           Interval y0 = Interval::symmetric(0.5));
  void validate() const;
};

// Full closed loop: plant -> encoder -> channel -> decoder/controller.
// Encoder and decoder are simulated as separate state machines connected
// only by the transmitted symbol (or loss) and the ACK bit.
class ClosedLoop {
 public:
  ClosedLoop(LoopConfig cfg, double p_fail, double q_recover,
             std::uint64_t channel_seed, std::uint64_t plant_seed);

  // One full cycle: quantize y_k, transmit, update both sides, apply u_k to
  // the plant. Throws saturation_error if the scaling invariant breaks.
  StepRecord step();

  long time() const { return k_; }
  bool converged() const { return converged_; }  // sigma underflow floor hit
  const Codec& encoder() const { return encoder_; }
  const Codec& decoder() const { return decoder_; }
  const Plant& plant() const { return plant_; }
  const GilbertElliott& channel() const { return channel_; }

  static void write_csv_header(std::ostream& os);
  static void write_csv_row(std::ostream& os, const StepRecord& r);

 private:
  LoopConfig cfg_;
  Plant plant_;
  GilbertElliott channel_;
  Codec encoder_;
  Codec decoder_;
  long k_ = 0;
  bool converged_ = false;
  StepRecord last_;
};

}  // namespace qstab
