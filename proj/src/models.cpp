#include "presup/models.hpp"

#include <algorithm>
#include <cmath>

#include "presup/error.hpp"
#include "presup/optim.hpp"

namespace presup {

using ad::Tape;
using ad::Var;

// ---------------------------------------------------------------------------
// Config

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::kWp: return "wp";
    case Variant::kLstm: return "lstm";
    case Variant::kCnn: return "cnn";
    case Variant::kLogReg: return "logreg";
    case Variant::kMfc: return "mfc";
  }
  return "?";
}

std::string_view to_string(PosMode m) {
  switch (m) {
    case PosMode::kOff: return "off";
    case PosMode::kOneHot: return "one_hot";
    case PosMode::kLearned: return "learned";
  }
  return "?";
}

std::string_view to_string(Activation a) { return a == Activation::kRelu ? "relu" : "tanh"; }

Variant parse_variant(std::string_view s) {
  for (Variant v : {Variant::kWp, Variant::kLstm, Variant::kCnn, Variant::kLogReg, Variant::kMfc})
    if (to_string(v) == s) return v;
  throw UsageError("unknown model variant '" + std::string(s) + "'");
}

PosMode parse_pos_mode(std::string_view s) {
  for (PosMode m : {PosMode::kOff, PosMode::kOneHot, PosMode::kLearned})
    if (to_string(m) == s) return m;
  throw UsageError("unknown POS mode '" + std::string(s) + "'");
}

Activation parse_activation(std::string_view s) {
  if (s == "relu") return Activation::kRelu;
  if (s == "tanh") return Activation::kTanh;
  throw UsageError("unknown activation '" + std::string(s) + "'");
}

void ModelConfig::validate() const {
  if (embedding_dim == 0) throw UsageError("model: embedding_dim must be positive");
  if (hidden == 0) throw UsageError("model: hidden must be positive");
  if (dense == 0) throw UsageError("model: dense must be positive");
  if (pos_mode == PosMode::kLearned && pos_dim == 0) throw UsageError("model: pos_dim must be positive");
  if (max_len < 2) throw UsageError("model: max_len must be >= 2");
  if (cnn_widths.empty() || cnn_maps == 0) throw UsageError("model: empty CNN filter bank");
  for (std::size_t w : cnn_widths)
    if (w == 0 || w > max_len) throw UsageError("model: CNN width out of range");
  if (logreg_l2 < 0) throw UsageError("model: logreg_l2 must be >= 0");
  if (min_count == 0) throw UsageError("model: min_count must be >= 1");
}

std::size_t ModelConfig::pos_feature_dim(const Vocab& vocab) const {
  switch (pos_mode) {
    case PosMode::kOff: return 0;
    case PosMode::kOneHot: return vocab.pos_size();
    case PosMode::kLearned: return pos_dim;
  }
  return 0;
}

nlohmann::ordered_json to_json(const ModelConfig& c) {
  nlohmann::ordered_json j;
  j["variant"] = std::string(to_string(c.variant));
  j["embedding_dim"] = c.embedding_dim;
  j["train_embeddings"] = c.train_embeddings;
  j["hidden"] = c.hidden;
  j["dense"] = c.dense;
  j["pos_mode"] = std::string(to_string(c.pos_mode));
  j["pos_dim"] = c.pos_dim;
  j["activation"] = std::string(to_string(c.activation));
  j["cnn_widths"] = c.cnn_widths;
  j["cnn_maps"] = c.cnn_maps;
  j["max_len"] = c.max_len;
  j["logreg_l2"] = c.logreg_l2;
  j["logreg_pos_features"] = c.logreg_pos_features;
  j["min_count"] = c.min_count;
  return j;
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  try {
    if (j.contains("variant")) c.variant = parse_variant(j.at("variant").get<std::string>());
    if (j.contains("embedding_dim")) c.embedding_dim = j.at("embedding_dim").get<std::size_t>();
    if (j.contains("train_embeddings")) c.train_embeddings = j.at("train_embeddings").get<bool>();
    if (j.contains("hidden")) c.hidden = j.at("hidden").get<std::size_t>();
    if (j.contains("dense")) c.dense = j.at("dense").get<std::size_t>();
    if (j.contains("pos_mode")) c.pos_mode = parse_pos_mode(j.at("pos_mode").get<std::string>());
    if (j.contains("pos_dim")) c.pos_dim = j.at("pos_dim").get<std::size_t>();
    if (j.contains("activation")) c.activation = parse_activation(j.at("activation").get<std::string>());
    if (j.contains("cnn_widths")) c.cnn_widths = j.at("cnn_widths").get<std::vector<std::size_t>>();
    if (j.contains("cnn_maps")) c.cnn_maps = j.at("cnn_maps").get<std::size_t>();
    if (j.contains("max_len")) c.max_len = j.at("max_len").get<std::size_t>();
    if (j.contains("logreg_l2")) c.logreg_l2 = j.at("logreg_l2").get<double>();
    if (j.contains("logreg_pos_features")) c.logreg_pos_features = j.at("logreg_pos_features").get<bool>();
    if (j.contains("min_count")) c.min_count = j.at("min_count").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("model config: ") + e.what());
  }
  c.validate();
  return c;
}

// ---------------------------------------------------------------------------
// Initialisation helpers

namespace {

Tensor uniform_tensor(Shape shape, double limit, Rng rng) {
  Tensor t(std::move(shape));
  for (double& x : t.data()) x = rng.uniform(-limit, limit);
  return t;
}

Tensor glorot(std::size_t fan_out, std::size_t fan_in, Rng rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  return uniform_tensor(Shape{fan_out, fan_in}, limit, rng);
}

void add_dense_params(ParamStore& p, const std::string& prefix, std::size_t out,
                      std::size_t in, Rng& rng) {
  p.add(prefix + ".W", glorot(out, in, rng.derive(prefix + ".W")));
  p.add(prefix + ".b", Tensor(Shape{out}));
}

Var dropout(Tape& tape, Var v, const ForwardContext& ctx) {
  if (ctx.mode != Mode::kTrain || ctx.dropout <= 0.0) return v;
  if (!ctx.rng) throw UsageError("train-mode dropout needs an Rng");
  return ad::mul(v, tape.constant(dropout_mask(v.shape(), ctx.dropout, *ctx.rng)));
}

Var activate(Var v, Activation a) { return a == Activation::kRelu ? ad::relu(v) : ad::tanh(v); }

}  // namespace

// ---------------------------------------------------------------------------
// Model base

Model::Model(ModelConfig config, Vocab vocab) : config_(std::move(config)), vocab_(std::move(vocab)) {
  config_.validate();
}

EncodedSample Model::encode(const Sample& raw) const {
  const Sample s = raw.tokens.size() > config_.max_len ? truncate_sample(raw, config_.max_len) : raw;
  if (s.tokens.empty()) throw UsageError("cannot encode an empty sample");
  EncodedSample e;
  e.tokens.reserve(s.tokens.size());
  e.pos.reserve(s.pos.size());
  for (const auto& t : s.tokens) e.tokens.push_back(vocab_.token_id(t));
  for (const auto& p : s.pos) e.pos.push_back(vocab_.pos_id(p));
  if (e.tokens.size() != e.pos.size()) throw UsageError("sample token/pos length mismatch");
  const auto it = std::find(s.tokens.begin(), s.tokens.end(), kMarker);
  e.marker = it == s.tokens.end() ? 0 : static_cast<std::size_t>(it - s.tokens.begin());
  e.label = binary_label(s);
  return e;
}

std::vector<EncodedSample> Model::encode_all(const std::vector<Sample>& samples) const {
  std::vector<EncodedSample> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(encode(s));
  return out;
}

std::array<double, 2> Model::predict_proba(const EncodedSample& sample) const {
  Tape tape;
  const Tensor& y = forward(tape, sample, ForwardContext{}).value();
  return {y[0], y[1]};
}

int Model::predict(const EncodedSample& sample) const {
  const auto p = predict_proba(sample);
  return p[1] >= p[0] ? 1 : 0;
}

// ---------------------------------------------------------------------------
// Embedding layer

void add_embedding_params(ParamStore& p, const ModelConfig& cfg, const Vocab& vocab,
                          Tensor word_table, Rng& rng) {
  if (word_table.rank() != 2 || word_table.shape()[0] != vocab.size() ||
      word_table.shape()[1] != cfg.embedding_dim) {
    throw ShapeError("embedding table " + to_string(word_table.shape()) + " does not match |V|=" +
                     std::to_string(vocab.size()) + ", d=" + std::to_string(cfg.embedding_dim));
  }
  p.add("embed.words", std::move(word_table), cfg.train_embeddings);
  p.add("embed.marker", uniform_tensor(Shape{1, cfg.embedding_dim}, 0.05, rng.derive("embed.marker")));
  if (cfg.pos_mode == PosMode::kLearned) {
    p.add("embed.pos", uniform_tensor(Shape{vocab.pos_size(), cfg.pos_dim}, 0.05,
                                      rng.derive("embed.pos")));
  }
}

Var embed_sequence(Tape& tape, const ParamStore& params, const ModelConfig& cfg,
                   const Vocab& vocab, const EncodedSample& s) {
  const std::size_t T = s.length();
  Var words = ad::gather_rows(tape.param(params, "embed.words"), s.tokens);
  Tensor mask(Shape{T, 1});
  bool any_marker = false;
  for (std::size_t t = 0; t < T; ++t) {
    if (s.tokens[t] == vocab.marker_id()) {
      mask.at(t, 0) = 1.0;
      any_marker = true;
    }
  }
  if (any_marker) {
    words = ad::add(words, ad::matmul(tape.constant(std::move(mask)), tape.param(params, "embed.marker")));
  }
  switch (cfg.pos_mode) {
    case PosMode::kOff:
      return words;
    case PosMode::kOneHot: {
      Tensor onehot(Shape{T, vocab.pos_size()});
      for (std::size_t t = 0; t < T; ++t) onehot.at(t, s.pos[t]) = 1.0;
      return ad::concat_cols(words, tape.constant(std::move(onehot)));
    }
    case PosMode::kLearned:
      return ad::concat_cols(words, ad::gather_rows(tape.param(params, "embed.pos"), s.pos));
  }
  return words;
}

// ---------------------------------------------------------------------------
// BiLSTM + attention

void add_bilstm_params(ParamStore& p, std::size_t input_dim, std::size_t hidden, Rng& rng) {
  for (const char* dir : {"fw", "bw"}) {
    const std::string prefix = std::string("lstm.") + dir;
    p.add(prefix + ".W_x", uniform_tensor(Shape{input_dim, 4 * hidden}, 0.08, rng.derive(prefix + ".W_x")));
    p.add(prefix + ".W_h", uniform_tensor(Shape{4 * hidden, hidden}, 0.08, rng.derive(prefix + ".W_h")));
    Tensor b(Shape{4 * hidden});
    for (std::size_t i = hidden; i < 2 * hidden; ++i) b[i] = 1.0;  // forget gate
    p.add(prefix + ".b", std::move(b));
  }
}

Var bilstm_forward(Tape& tape, const ParamStore& params, Var x) {
  const std::size_t T = x.value().shape()[0];
  if (T == 0) throw UsageError("bilstm_forward: empty sequence");
  std::vector<Var> states[2];
  int d = 0;
  for (const char* dir : {"fw", "bw"}) {
    const std::string prefix = std::string("lstm.") + dir;
    Var wx = tape.param(params, prefix + ".W_x");
    Var wh = tape.param(params, prefix + ".W_h");
    Var b = tape.param(params, prefix + ".b");
    const std::size_t s = wh.value().shape()[1];
    Var proj = ad::add(ad::matmul(x, wx), b);  // T x 4s
    std::vector<Var>& hs = states[d];
    hs.resize(T);
    Var h, c;
    bool first = true;
    for (std::size_t k = 0; k < T; ++k) {
      const std::size_t t = d == 0 ? k : T - 1 - k;
      Var z = ad::row(proj, t);
      if (!first) z = ad::add(z, ad::matmul(wh, h));
      Var i = ad::sigmoid(ad::slice(z, 0, s));
      Var f = ad::sigmoid(ad::slice(z, s, 2 * s));
      Var g = ad::tanh(ad::slice(z, 2 * s, 3 * s));
      Var o = ad::sigmoid(ad::slice(z, 3 * s, 4 * s));
      c = first ? ad::mul(i, g) : ad::add(ad::mul(f, c), ad::mul(i, g));
      h = ad::mul(o, ad::tanh(c));
      hs[t] = h;
      first = false;
    }
    ++d;
  }
  std::vector<Var> cols;
  cols.reserve(T);
  for (std::size_t t = 0; t < T; ++t) cols.push_back(ad::concat(states[0][t], states[1][t]));
  return ad::stack_cols(cols);
}

AttentionVars attention_weights(Var h) {
  AttentionVars a;
  a.m = ad::matmul(ad::transpose(h), h);
  a.m_row = ad::softmax_axis(a.m, Axis::kCols);
  a.m_col = ad::softmax_axis(a.m, Axis::kRows);
  a.beta = ad::mean_axis(a.m_row, Axis::kRows);
  a.alpha = ad::matmul(a.m_col, a.beta);
  return a;
}

Var weighted_pool(Var h, Var alpha) { return ad::matmul(h, alpha); }

RecurrentModel::RecurrentModel(ModelConfig config, Vocab vocab, Tensor word_table, Rng& rng)
    : Model(std::move(config), std::move(vocab)) {
  if (config_.variant != Variant::kWp && config_.variant != Variant::kLstm) {
    throw UsageError("RecurrentModel needs variant wp or lstm");
  }
  add_embedding_params(params_, config_, vocab_, std::move(word_table), rng);
  add_bilstm_params(params_, config_.input_dim(vocab_), config_.hidden, rng);
  add_dense_params(params_, "dense", config_.dense, 2 * config_.hidden, rng);
  add_dense_params(params_, "out", 2, config_.dense, rng);
}

Var RecurrentModel::forward(Tape& tape, const EncodedSample& sample, const ForwardContext& ctx) const {
  return forward_traced(tape, sample, ctx, nullptr, false);
}

Var RecurrentModel::forward_traced(Tape& tape, const EncodedSample& sample, const ForwardContext& ctx,
                                   ForwardTrace* trace, bool uniform_alpha) const {
  Var x = embed_sequence(tape, params_, config_, vocab_, sample);
  Var h = bilstm_forward(tape, params_, x);
  const std::size_t T = sample.length();

  Var alpha;
  std::optional<AttentionVars> att;
  if (config_.variant == Variant::kWp && !uniform_alpha) {
    att = attention_weights(h);
    alpha = att->alpha;
  } else {
    alpha = tape.constant(Tensor(Shape{T}, 1.0 / static_cast<double>(T)));
  }
  Var c = weighted_pool(h, alpha);
  Var z = activate(ad::add(ad::matmul(tape.param(params_, "dense.W"), c),
                           tape.param(params_, "dense.b")),
                   config_.activation);
  z = dropout(tape, z, ctx);
  Var logits = ad::add(ad::matmul(tape.param(params_, "out.W"), z), tape.param(params_, "out.b"));
  Var y = ad::softmax(logits);

  if (trace) {
    trace->x = x.value();
    trace->h = h.value();
    if (att) {
      trace->m = att->m.value();
      trace->m_row = att->m_row.value();
      trace->m_col = att->m_col.value();
      trace->beta = att->beta.value();
      trace->alpha_rowT = kernels::matmul(kernels::transpose(trace->m_row), trace->beta);
    }
    trace->alpha = alpha.value();
    trace->c = c.value();
    trace->z = z.value();
    trace->y = y.value();
  }
  return y;
}

ForwardTrace RecurrentModel::trace(const EncodedSample& sample) const {
  Tape tape;
  ForwardTrace t;
  forward_traced(tape, sample, ForwardContext{}, &t);
  return t;
}

// ---------------------------------------------------------------------------
// CNN

CnnModel::CnnModel(ModelConfig config, Vocab vocab, Tensor word_table, Rng& rng)
    : Model(std::move(config), std::move(vocab)) {
  if (config_.variant != Variant::kCnn) throw UsageError("CnnModel needs variant cnn");
  add_embedding_params(params_, config_, vocab_, std::move(word_table), rng);
  const std::size_t n = config_.input_dim(vocab_);
  for (std::size_t w : config_.cnn_widths) {
    const std::string prefix = "cnn.w" + std::to_string(w);
    params_.add(prefix + ".W", glorot(w * n, config_.cnn_maps, rng.derive(prefix + ".W")));
    params_.add(prefix + ".b", Tensor(Shape{config_.cnn_maps}));
  }
  add_dense_params(params_, "out", 2, config_.cnn_maps * config_.cnn_widths.size(), rng);
}

Var CnnModel::forward(Tape& tape, const EncodedSample& sample, const ForwardContext& ctx) const {
  return forward_embedded(tape, embed_sequence(tape, params_, config_, vocab_, sample), ctx);
}

Var CnnModel::forward_embedded(Tape& tape, Var x, const ForwardContext& ctx, Var* logits_out,
                               Var* pooled_out) const {
  const std::size_t T = x.value().shape()[0];
  const std::size_t n = x.value().shape()[1];
  const std::size_t L = config_.max_len;
  if (T > L) throw UsageError("cnn: sequence longer than max_len");
  if (T < L) x = ad::concat_rows(x, tape.constant(Tensor(Shape{L - T, n})));

  Var pooled;
  bool first = true;
  for (std::size_t w : config_.cnn_widths) {
    const std::string prefix = "cnn.w" + std::to_string(w);
    Var conv = ad::relu(ad::add(ad::matmul(ad::unfold_rows(x, w), tape.param(params_, prefix + ".W")),
                                tape.param(params_, prefix + ".b")));
    Var m = ad::max_axis(conv, Axis::kRows);
    pooled = first ? m : ad::concat(pooled, m);
    first = false;
  }
  if (pooled_out) *pooled_out = pooled;
  pooled = dropout(tape, pooled, ctx);
  Var logits = ad::add(ad::matmul(tape.param(params_, "out.W"), pooled), tape.param(params_, "out.b"));
  if (logits_out) *logits_out = logits;
  return ad::softmax(logits);
}

// ---------------------------------------------------------------------------
// Logistic regression

std::map<std::string, double> logreg_featurize(const std::vector<std::string>& tokens) {
  static const std::string kJoin = "\xE2\x96\x81";  // U+2581
  std::map<std::string, double> f;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    f[tokens[i]] += 1.0;
    if (i + 1 < tokens.size()) f[tokens[i] + kJoin + tokens[i + 1]] += 1.0;
  }
  return f;
}

LogRegModel::LogRegModel(ModelConfig config, Vocab vocab, const std::vector<Sample>& train)
    : Model(std::move(config), std::move(vocab)) {
  if (config_.variant != Variant::kLogReg) throw UsageError("LogRegModel needs variant logreg");
  std::map<std::string, double> all;
  for (const auto& s : train)
    for (const auto& [k, v] : sample_features(s)) all[k] += v;
  std::vector<std::string> names;
  names.reserve(all.size());
  for (const auto& [k, v] : all) names.push_back(k);
  index_features(std::move(names));
}

std::map<std::string, double> LogRegModel::sample_features(const Sample& s) const {
  auto f = logreg_featurize(s.tokens);
  if (config_.logreg_pos_features) {
    for (const auto& [k, v] : logreg_featurize(s.pos)) f["pos=" + k] += v;
  }
  return f;
}

void LogRegModel::index_features(std::vector<std::string> names) {
  features_ = std::move(names);
  feature_ids_.clear();
  for (std::size_t i = 0; i < features_.size(); ++i) feature_ids_.emplace(features_[i], i);
  ParamStore fresh;
  fresh.add("logreg.b", Tensor(Shape{1}));
  fresh.add("logreg.w", Tensor(Shape{features_.size()}));
  params_ = std::move(fresh);
}

EncodedSample LogRegModel::encode(const Sample& sample) const {
  EncodedSample e = Model::encode(sample);
  for (const auto& [k, v] : sample_features(sample)) {
    auto it = feature_ids_.find(k);
    if (it == feature_ids_.end()) continue;  // unseen at training time
    e.feature_ids.push_back(it->second);
    e.feature_counts.push_back(v);
  }
  return e;
}

Var LogRegModel::forward(Tape& tape, const EncodedSample& s, const ForwardContext&) const {
  Var w = ad::gather(tape.param(params_, "logreg.w"), s.feature_ids);
  Var score = ad::add(ad::dot(w, tape.constant(Tensor::vector(s.feature_counts))),
                      tape.param(params_, "logreg.b"));
  return ad::softmax(ad::concat(tape.constant(Tensor::vector({0.0})), score));
}

std::optional<Var> LogRegModel::penalty(Tape& tape) const {
  if (config_.logreg_l2 == 0.0) return std::nullopt;
  Var w = tape.param(params_, "logreg.w");
  return ad::scale(ad::sum(ad::mul(w, w)), 0.5 * config_.logreg_l2);
}

nlohmann::ordered_json LogRegModel::extra_state() const {
  nlohmann::ordered_json j;
  j["features"] = features_;
  return j;
}

void LogRegModel::load_extra_state(const nlohmann::json& j) {
  index_features(j.at("features").get<std::vector<std::string>>());
}

// ---------------------------------------------------------------------------
// Most frequent class

MfcModel::MfcModel(ModelConfig config, Vocab vocab) : Model(std::move(config), std::move(vocab)) {
  if (config_.variant != Variant::kMfc) throw UsageError("MfcModel needs variant mfc");
}

Var MfcModel::forward(Tape& tape, const EncodedSample&, const ForwardContext&) const {
  return tape.constant(majority_ == 1 ? Tensor::vector({0.0, 1.0}) : Tensor::vector({1.0, 0.0}));
}

void MfcModel::fit(const std::vector<EncodedSample>& train) {
  if (train.empty()) throw UsageError("mfc: empty training set");
  std::size_t pos = 0;
  for (const auto& s : train) pos += s.label == 1;
  majority_ = 2 * pos >= train.size() ? 1 : 0;
}

nlohmann::ordered_json MfcModel::extra_state() const {
  nlohmann::ordered_json j;
  j["majority"] = majority_;
  return j;
}

void MfcModel::load_extra_state(const nlohmann::json& j) {
  majority_ = j.at("majority").get<int>();
  if (majority_ != 0 && majority_ != 1) throw UsageError("mfc: majority must be 0 or 1");
}

// ---------------------------------------------------------------------------
// Factories

std::unique_ptr<Model> instantiate_model(const ModelConfig& cfg, Vocab vocab, Tensor word_table,
                                         const std::vector<Sample>& train, Rng& rng) {
  Rng init = rng.derive("init");
  switch (cfg.variant) {
    case Variant::kWp:
    case Variant::kLstm:
      return std::make_unique<RecurrentModel>(cfg, std::move(vocab), std::move(word_table), init);
    case Variant::kCnn:
      return std::make_unique<CnnModel>(cfg, std::move(vocab), std::move(word_table), init);
    case Variant::kLogReg:
      return std::make_unique<LogRegModel>(cfg, std::move(vocab), train);
    case Variant::kMfc:
      return std::make_unique<MfcModel>(cfg, std::move(vocab));
  }
  throw UsageError("unhandled variant");
}

std::unique_ptr<Model> create_model(const ModelConfig& cfg, const std::vector<Sample>& train,
                                    const std::string& embeddings_path, Rng& rng) {
  cfg.validate();
  Vocab vocab = Vocab::build(train, cfg.min_count);
  Tensor table;
  const bool neural = cfg.variant == Variant::kWp || cfg.variant == Variant::kLstm ||
                      cfg.variant == Variant::kCnn;
  if (neural) {
    const Rng emb = rng.derive("embeddings");
    table = embeddings_path.empty() ? random_embeddings(vocab, cfg.embedding_dim, emb)
                                    : load_embeddings(embeddings_path, vocab, cfg.embedding_dim, emb);
  }
  return instantiate_model(cfg, std::move(vocab), std::move(table), train, rng);
}

}  // namespace presup
