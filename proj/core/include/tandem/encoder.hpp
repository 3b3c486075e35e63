#ifndef TANDEM_ENCODER_HPP_
#define TANDEM_ENCODER_HPP_

#include <memory>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "tandem/adam.hpp"
#include "tandem/clips.hpp"
#include "tandem/graph.hpp"

namespace tandem {

// Small transformer encoder over image patch tokens plus two hand-position
// tokens and one readout token.
struct EncoderConfig {
  int frame_size = kFrameSize;
  int patch_size = 8;
  int token_dim = 64;
  int depth = 2;
  int heads = 4;
  int embed_dim = 32;          // K
  int mlp_ratio = 2;
  std::vector<int> hand_hidden = {16, 32};
  double temperature = 1.0;    // tau of the similarity
  bool ablate_hands = false;

  int patches_per_side() const { return frame_size / patch_size; }
  int num_patches() const { return patches_per_side() * patches_per_side(); }
  int patch_dim() const { return patch_size * patch_size * 3; }
  int seq_len() const { return 1 + num_patches() + (ablate_hands ? 0 : 2); }

  nlohmann::json to_json() const;
  static EncoderConfig from_json(const nlohmann::json& j);
};

struct Embedding {
  std::vector<double> z;
};

// s = exp(-|z1 - z2|_2 / tau), in (0, 1], symmetric, 1 iff equal.
double similarity(const Embedding& z1, const Embedding& z2, double tau);

// -log( e^{s_ij} / (e^{s_ij} + e^{s_ik} + e^{s_il}) )
double tcn_loss(double s_ij, double s_ik, double s_il);

// |z|_1 + |z|_2
double reg_loss(const Embedding& z);

// Flattens a frame into the [num_patches, patch_dim] token input.
Tensor frame_to_patches(const Frame& frame, const EncoderConfig& cfg);

// Builds the encode graph for one observation with inputs named
// "<prefix>patches", "<prefix>hand_l", "<prefix>hand_r",
// "<prefix>flag_l", "<prefix>flag_r"; returns the embedding node [1, K].
int build_encode_graph(Graph& g, const EncoderConfig& cfg,
                       const std::string& prefix);

// Fills the executor input store for one observation.
void bind_observation(ParamStore& inputs, const std::string& prefix,
                      const Frame& frame, const HandCoords& hands,
                      const EncoderConfig& cfg);

// Reusable single-observation encoder runtime.
class Encoder {
 public:
  explicit Encoder(EncoderConfig cfg);

  Embedding encode(const Frame& frame, const HandCoords& hands,
                   const ParamStore& params);
  const EncoderConfig& config() const { return cfg_; }
  const Graph& graph() const { return graph_; }
  int z_node() const { return z_node_; }

  ParamStore init_params(uint64_t seed) const;

 private:
  EncoderConfig cfg_;
  Graph graph_;
  int z_node_ = -1;
  std::unique_ptr<Executor> exec_;
};

// Indices of a sampled (anchor, positive, in-clip negative, other-clip)
// quadruplet; all four observations share one view.
struct Quadruplet {
  int clip = 0;
  int anchor = 0, positive = 0, negative = 0;
  int other_clip = 0, other_frame = 0;
};

// anchor i uniform; positive with 1 <= |i-j| <= w_pos; in-clip negative
// with |i-k| >= w_neg; other frame uniform from a different same-view clip.
Quadruplet sample_quadruplet(const ClipDataset& dataset, Rng& rng,
                             int w_pos = 3, int w_neg = 10);

struct EncoderTrainConfig {
  int stage = 1;
  int steps = 2000;
  int batch_size = 16;
  double lr = 1e-4;            // base learning rate
  double stage2_lr_scale = 0.1;  // pre-existing weights during stage 2
  double lambda_reg = 1e-3;
  int w_pos = 3;
  int w_neg = 10;
  int eval_every = 200;
  int eval_quadruplets = 64;
  uint64_t seed = 0;
};

struct EncoderTrainResult {
  ParamStore params;
  std::vector<double> train_loss;            // per step (tcn + reg term)
  std::vector<double> train_tcn;             // per step
  std::vector<std::pair<int, double>> heldout_tcn;  // (step, loss)
  double final_train_tcn = 0.0;              // mean over the last 10 steps
};

// Stage 1 trains visual weights with hand tokens pinned to the zero absent
// tokens; stage 2 starts from `init` (a stage-1 checkpoint), unfreezes the
// hand path at full rate and fine-tunes everything else at a reduced rate.
EncoderTrainResult train_encoder(const ClipDataset& train,
                                 const ClipDataset& heldout,
                                 const EncoderConfig& cfg,
                                 const EncoderTrainConfig& tc,
                                 const ParamStore* init = nullptr);

void save_encoder_checkpoint(const std::string& path, const ParamStore& params,
                             const EncoderConfig& cfg);
std::pair<ParamStore, EncoderConfig> load_encoder_checkpoint(
    const std::string& path);

void write_loss_curve_csv(const std::string& path,
                          const EncoderTrainResult& result);

}  // namespace tandem

#endif  // TANDEM_ENCODER_HPP_
