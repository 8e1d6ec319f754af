#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "presup/autodiff.hpp"
#include "presup/extract.hpp"
#include "presup/param_store.hpp"
#include "presup/rng.hpp"
#include "presup/vocab.hpp"

namespace presup {

enum class Variant { kWp, kLstm, kCnn, kLogReg, kMfc };
enum class PosMode { kOff, kOneHot, kLearned };
enum class Activation { kRelu, kTanh };

std::string_view to_string(Variant v);
std::string_view to_string(PosMode m);
std::string_view to_string(Activation a);
Variant parse_variant(std::string_view s);
PosMode parse_pos_mode(std::string_view s);
Activation parse_activation(std::string_view s);

struct ModelConfig {
  Variant variant = Variant::kWp;
  std::size_t embedding_dim = 300;
  bool train_embeddings = false;
  std::size_t hidden = 64;  // per LSTM direction
  std::size_t dense = 64;
  PosMode pos_mode = PosMode::kLearned;
  std::size_t pos_dim = 40;  // learned mode only
  Activation activation = Activation::kRelu;
  std::vector<std::size_t> cnn_widths{3, 4, 5};
  std::size_t cnn_maps = 100;
  std::size_t max_len = 60;
  double logreg_l2 = 1e-4;
  bool logreg_pos_features = false;
  std::size_t min_count = 1;

  void validate() const;
  std::size_t pos_feature_dim(const Vocab& vocab) const;
  std::size_t input_dim(const Vocab& vocab) const {
    return embedding_dim + pos_feature_dim(vocab);
  }
};

nlohmann::ordered_json to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const nlohmann::json& j);

// Label convention: 1 = trigger present, 0 = absent ("none").
inline int binary_label(const Sample& s) { return s.positive() ? 1 : 0; }

struct EncodedSample {
  std::vector<std::size_t> tokens;
  std::vector<std::size_t> pos;
  std::size_t marker = 0;
  int label = 0;
  std::vector<std::size_t> feature_ids;
  std::vector<double> feature_counts;

  std::size_t length() const noexcept { return tokens.size(); }
};

enum class Mode { kTrain, kEval };

struct ForwardContext {
  Mode mode = Mode::kEval;
  double dropout = 0.0;
  Rng* rng = nullptr;  // required when mode == kTrain and dropout > 0
};

// Intermediate values of one weighted-pooling forward pass.
struct ForwardTrace {
  Tensor x;           // T x input_dim
  Tensor h;           // 2s x T
  Tensor m;           // T x T, H^T H
  Tensor m_row;       // row-wise softmax of m
  Tensor m_col;       // column-wise softmax of m
  Tensor beta;        // column means of m_row
  Tensor alpha;       // m_col * beta
  Tensor alpha_rowT;  // m_row^T * beta (equal to alpha since m is symmetric)
  Tensor c;           // 2s
  Tensor z;           // dense
  Tensor y;           // 2
};

class Model {
 public:
  Model(ModelConfig config, Vocab vocab);
  virtual ~Model() = default;
  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;

  Variant variant() const noexcept { return config_.variant; }
  const ModelConfig& config() const noexcept { return config_; }
  const Vocab& vocab() const noexcept { return vocab_; }
  ParamStore& params() noexcept { return params_; }
  const ParamStore& params() const noexcept { return params_; }

  virtual EncodedSample encode(const Sample& sample) const;
  std::vector<EncodedSample> encode_all(const std::vector<Sample>& samples) const;

  // Class distribution [p(absent), p(present)] recorded on `tape`.
  virtual ad::Var forward(ad::Tape& tape, const EncodedSample& sample,
                          const ForwardContext& ctx) const = 0;
  // Extra loss term added once per mini-batch.
  virtual std::optional<ad::Var> penalty(ad::Tape&) const { return std::nullopt; }

  // False for models fitted in closed form (see fit()).
  virtual bool gradient_trained() const { return true; }
  virtual void fit(const std::vector<EncodedSample>&) {}

  // Variant-specific state beyond the parameter store.
  virtual nlohmann::ordered_json extra_state() const { return nlohmann::ordered_json::object(); }
  virtual void load_extra_state(const nlohmann::json&) {}

  std::array<double, 2> predict_proba(const EncodedSample& sample) const;
  int predict(const EncodedSample& sample) const;

 protected:
  ModelConfig config_;
  Vocab vocab_;
  ParamStore params_;
};

// Shared embedding layer: frozen word table, a trainable marker row added
// at marker positions, and the configured POS feature. Returns T x input_dim.
ad::Var embed_sequence(ad::Tape& tape, const ParamStore& params, const ModelConfig& cfg,
                       const Vocab& vocab, const EncodedSample& sample);

void add_embedding_params(ParamStore& params, const ModelConfig& cfg, const Vocab& vocab,
                          Tensor word_table, Rng& rng);

// Bidirectional LSTM over the rows of X. Gate order in the stacked weights
// is input, forget, cell, output. Returns H with shape 2s x T.
ad::Var bilstm_forward(ad::Tape& tape, const ParamStore& params, ad::Var x);
void add_bilstm_params(ParamStore& params, std::size_t input_dim, std::size_t hidden, Rng& rng);

struct AttentionVars {
  ad::Var m, m_row, m_col, beta, alpha;
};
// Attention-over-attention over the Gram matrix of H (2s x T).
AttentionVars attention_weights(ad::Var h);
// c = H alpha
ad::Var weighted_pool(ad::Var h, ad::Var alpha);

// WP and the mean-pooling LSTM baseline: identical parameters and pipeline,
// differing only in where the pooling weights come from.
class RecurrentModel : public Model {
 public:
  RecurrentModel(ModelConfig config, Vocab vocab, Tensor word_table, Rng& rng);

  ad::Var forward(ad::Tape& tape, const EncodedSample& sample,
                  const ForwardContext& ctx) const override;

  // Full pass with every intermediate value captured. For WP, when
  // `uniform_alpha` is set the attention weights are replaced by 1/T.
  ad::Var forward_traced(ad::Tape& tape, const EncodedSample& sample, const ForwardContext& ctx,
                         ForwardTrace* trace, bool uniform_alpha = false) const;
  ForwardTrace trace(const EncodedSample& sample) const;
};

class CnnModel : public Model {
 public:
  CnnModel(ModelConfig config, Vocab vocab, Tensor word_table, Rng& rng);

  ad::Var forward(ad::Tape& tape, const EncodedSample& sample,
                  const ForwardContext& ctx) const override;
  // From an already embedded T x input_dim matrix; zero-pads to max_len.
  ad::Var forward_embedded(ad::Tape& tape, ad::Var x, const ForwardContext& ctx,
                           ad::Var* logits = nullptr, ad::Var* pooled = nullptr) const;
};

// Unigram and bigram counts; bigram keys join the two tokens with U+2581.
std::map<std::string, double> logreg_featurize(const std::vector<std::string>& tokens);

class LogRegModel : public Model {
 public:
  LogRegModel(ModelConfig config, Vocab vocab, const std::vector<Sample>& train);

  EncodedSample encode(const Sample& sample) const override;
  ad::Var forward(ad::Tape& tape, const EncodedSample& sample,
                  const ForwardContext& ctx) const override;
  std::optional<ad::Var> penalty(ad::Tape& tape) const override;

  nlohmann::ordered_json extra_state() const override;
  void load_extra_state(const nlohmann::json& j) override;

  std::size_t feature_count() const noexcept { return features_.size(); }

 private:
  std::map<std::string, double> sample_features(const Sample& sample) const;
  void index_features(std::vector<std::string> names);

  std::vector<std::string> features_;
  std::map<std::string, std::size_t> feature_ids_;
};

class MfcModel : public Model {
 public:
  MfcModel(ModelConfig config, Vocab vocab);

  ad::Var forward(ad::Tape& tape, const EncodedSample& sample,
                  const ForwardContext& ctx) const override;
  bool gradient_trained() const override { return false; }
  // Majority training label; a tie goes to class 1.
  void fit(const std::vector<EncodedSample>& train) override;

  nlohmann::ordered_json extra_state() const override;
  void load_extra_state(const nlohmann::json& j) override;

  int majority() const noexcept { return majority_; }

 private:
  int majority_ = 1;
};

// Builds vocabulary and embeddings from the training set and initialises a
// model of the configured variant. `embeddings_path` may be empty, in which
// case every word vector is random.
std::unique_ptr<Model> create_model(const ModelConfig& cfg, const std::vector<Sample>& train,
                                    const std::string& embeddings_path, Rng& rng);

// Construct an uninitialised-parameter shell for loading a checkpoint.
std::unique_ptr<Model> instantiate_model(const ModelConfig& cfg, Vocab vocab, Tensor word_table,
                                         const std::vector<Sample>& train, Rng& rng);

}  // namespace presup
