#ifndef SNAKECPG_CPG_HPP
#define SNAKECPG_CPG_HPP

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace snakecpg::cpg {

// Which equation set drives the network. Original ignores the feedback
// channel entirely; Mpf injects b*p into the membrane equations; Af injects
// -p into the adaptation equations.
enum class Form { Original, Mpf, Af };

// Diagnostic knob for the Af form only: Activating flips the sign of the
// feedback term in the adaptation equations, the configuration under which
// sustained feedback stalls the rhythm. Mpf and Original ignore it.
enum class FeedbackPolarity { Inhibiting, Activating };

struct OscillatorParams {
  double a = 4.6062;        // mutual-inhibition weight
  double b = 10.0355;       // self-inhibition weight
  double tau_r = 0.7696;    // discharge rate [s]
  double tau_a = 1.7728;    // adaptation rate [s]
  double k_f = 1.0;         // frequency ratio
  double c = 0.0;           // free-response tonic input

  // Throws std::invalid_argument naming the offending field.
  void validate() const;
};

struct NeuronPairState {
  double x_e = 0.0;
  double x_f = 0.0;
  double y_e = 0.0;
  double y_f = 0.0;
};

struct PairInput {
  double e = 0.0;
  double f = 0.0;
};

// Immutable network description: per-pair parameters plus the coupling
// matrix. coupling(j, i) is the weight w_ji of pair j inhibiting pair i
// through the -sum_j w_ji * y_j^q terms of the membrane equations.
struct CpgNetwork {
  std::vector<OscillatorParams> params;
  Eigen::MatrixXd coupling;
  Form form = Form::Original;
  FeedbackPolarity polarity = FeedbackPolarity::Inhibiting;

  std::size_t size() const { return params.size(); }
  void validate() const;
};

struct CpgNetworkState {
  std::vector<NeuronPairState> pairs;
  std::vector<PairInput> u;  // tonic inputs, clamped to [0,1] on ingestion
  std::vector<PairInput> p;  // feedback inputs, clamped to [0,1] on ingestion
  double t = 0.0;

  std::size_t size() const { return pairs.size(); }
};

struct CpgOutput {
  std::vector<double> z;        // z_i = z_e - z_f per pair
  std::vector<double> z_e;
  std::vector<double> z_f;
};

inline double rectify(double x) { return x > 0.0 ? x : 0.0; }

// Zero-state network state sized for the network, u = p = 0.
CpgNetworkState zero_state(const CpgNetwork& net);

// Clamp every u and p component into [0,1].
void set_tonic(CpgNetworkState& state, std::size_t pair, double u_e, double u_f);
void set_feedback(CpgNetworkState& state, std::size_t pair, double p_e, double p_f);

// Small symmetry-breaking kick (+1e-3 on x_e of the head pair), applied by
// scenario setup when c > 0 and the tonic inputs are symmetric; a perfectly
// symmetric start sits on a non-oscillating manifold.
void apply_symmetry_break(CpgNetworkState& state);

// Right-hand sides of the selected equation set, one slope record per pair.
// Rejects non-finite states or parameters.
std::vector<NeuronPairState> derivative(const CpgNetwork& net,
                                        const CpgNetworkState& state);

// One classical fixed-step 4th-order integration step with u, p held
// constant (zero-order hold). Deterministic. Throws on a non-finite result.
CpgOutput step(const CpgNetwork& net, CpgNetworkState& state, double dt);

CpgOutput outputs(const CpgNetworkState& state);

// Nearest-neighbor chain of n identical pairs: pair i inhibits pair i+1
// with weight w_descending and pair i+1 inhibits pair i with w_ascending.
CpgNetwork build_chain(std::size_t n_links, const OscillatorParams& params,
                       double w_descending, double w_ascending,
                       Form form = Form::Original);

}  // namespace snakecpg::cpg

#endif
