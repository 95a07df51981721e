#include "lma/model.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "lma/hashing.hpp"

#include "binary_io.hpp"

namespace lma {

namespace {

constexpr char kMlpMagic[8] = {'L', 'M', 'A', 'M', 'L', 'P', '0', '1'};

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// log(1 + e^z) without overflow.
double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

double bce_from_logit(double z, double label) { return softplus(z) - label * z; }

}  // namespace

std::string to_string(EmbeddingKind k) {
  switch (k) {
    case EmbeddingKind::kFull: return "full";
    case EmbeddingKind::kNaiveHash: return "hash";
    case EmbeddingKind::kLma: return "lma";
    case EmbeddingKind::kQr: return "qr";
  }
  throw std::invalid_argument("unknown embedding kind");
}

EmbeddingKind embedding_kind_from_string(std::string_view name) {
  if (name == "full") return EmbeddingKind::kFull;
  if (name == "hash") return EmbeddingKind::kNaiveHash;
  if (name == "lma") return EmbeddingKind::kLma;
  if (name == "qr") return EmbeddingKind::kQr;
  throw std::invalid_argument("unknown embedding kind '" + std::string(name) + "'");
}

std::uint64_t ModelConfig::resolve_budget(std::uint64_t value_count) const {
  if (embedding == EmbeddingKind::kFull) return value_count * dim;
  if (budget && expansion_rate) {
    throw std::invalid_argument("ModelConfig: give either budget or expansion_rate, not both");
  }
  if (budget) return *budget;
  if (expansion_rate) {
    if (*expansion_rate <= 0.0) throw std::invalid_argument("ModelConfig: alpha must be > 0");
    const double m = std::ceil(static_cast<double>(value_count) * dim / *expansion_rate);
    return static_cast<std::uint64_t>(m);
  }
  throw std::invalid_argument("ModelConfig: budget or expansion_rate required");
}

void to_json(nlohmann::json& j, const ModelConfig& c) {
  j = nlohmann::json{{"embedding", to_string(c.embedding)},
                     {"dim", c.dim},
                     {"budget", c.budget ? nlohmann::json(*c.budget) : nlohmann::json()},
                     {"expansion_rate",
                      c.expansion_rate ? nlohmann::json(*c.expansion_rate) : nlohmann::json()},
                     {"power", c.power},
                     {"sparse_threshold", c.sparse_threshold},
                     {"bottom_widths", c.bottom_widths},
                     {"top_widths", c.top_widths},
                     {"learning_rate", c.learning_rate},
                     {"batch_size", c.batch_size},
                     {"epochs", c.epochs},
                     {"seed", c.seed},
                     {"subsample_rows", c.subsample_rows}};
}

void from_json(const nlohmann::json& j, ModelConfig& c) {
  c.embedding = embedding_kind_from_string(j.at("embedding").get<std::string>());
  j.at("dim").get_to(c.dim);
  c.budget.reset();
  c.expansion_rate.reset();
  if (!j.at("budget").is_null()) c.budget = j.at("budget").get<std::uint64_t>();
  if (!j.at("expansion_rate").is_null()) c.expansion_rate = j.at("expansion_rate").get<double>();
  j.at("power").get_to(c.power);
  j.at("sparse_threshold").get_to(c.sparse_threshold);
  j.at("bottom_widths").get_to(c.bottom_widths);
  j.at("top_widths").get_to(c.top_widths);
  j.at("learning_rate").get_to(c.learning_rate);
  j.at("batch_size").get_to(c.batch_size);
  j.at("epochs").get_to(c.epochs);
  j.at("seed").get_to(c.seed);
  j.at("subsample_rows").get_to(c.subsample_rows);
}

Batch make_batch(const EncodedTable& table, std::span<const std::uint32_t> rows) {
  Batch batch;
  batch.cat_cols = table.cat_cols;
  batch.dense.resize(static_cast<Eigen::Index>(rows.size()),
                     static_cast<Eigen::Index>(table.dense_cols));
  batch.cats.resize(rows.size() * table.cat_cols);
  batch.labels.resize(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const std::uint64_t r = rows[i];
    for (std::uint32_t c = 0; c < table.dense_cols; ++c) {
      batch.dense(static_cast<Eigen::Index>(i), c) = table.dense_at(r, c);
    }
    for (std::uint32_t f = 0; f < table.cat_cols; ++f) {
      batch.cats[i * table.cat_cols + f] = table.cat_at(r, f);
    }
    batch.labels[i] = table.labels[r];
  }
  return batch;
}

std::optional<double> roc_auc(std::span<const double> scores,
                              std::span<const std::uint8_t> labels) {
  if (scores.size() != labels.size()) throw std::invalid_argument("roc_auc: length mismatch");
  const std::size_t n = scores.size();
  std::uint64_t positives = 0;
  for (auto y : labels) positives += y ? 1 : 0;
  const std::uint64_t negatives = n - positives;
  if (positives == 0 || negatives == 0) return std::nullopt;

  std::vector<std::uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0u);
  std::sort(order.begin(), order.end(),
            [&](std::uint32_t a, std::uint32_t b) { return scores[a] < scores[b]; });

  double positive_rank_sum = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);  // ranks i+1 .. j
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]]) positive_rank_sum += midrank;
    }
    i = j;
  }
  const double p = static_cast<double>(positives);
  return (positive_rank_sum - p * (p + 1.0) / 2.0) / (p * static_cast<double>(negatives));
}

Eigen::RowVectorXd QrEmbedding::lookup(ValueId v) const {
  const auto m_q = static_cast<std::uint64_t>(table1.rows());
  const std::uint64_t j = v % m_q;
  const std::uint64_t k = v / m_q;
  if (static_cast<Eigen::Index>(k) >= table2.rows()) {
    throw std::out_of_range("QrEmbedding: value outside table coverage");
  }
  return table1.row(static_cast<Eigen::Index>(j))
      .cwiseProduct(table2.row(static_cast<Eigen::Index>(k)));
}

std::uint64_t QrEmbedding::choose_partition(std::uint64_t budget, std::uint64_t value_count,
                                            std::uint32_t dim) {
  if (value_count == 0 || dim == 0) throw std::invalid_argument("choose_partition: empty table");
  const double m = static_cast<double>(budget);
  const double s = static_cast<double>(value_count);
  const double d = static_cast<double>(dim);
  const double disc = m * m - 4.0 * s * d * d;
  std::uint64_t m_q;
  if (disc >= 0.0) {
    m_q = static_cast<std::uint64_t>(std::floor((m + std::sqrt(disc)) / (2.0 * d)));
  } else {
    // Budget cannot hold both tables at this d; use the memory-optimal split.
    m_q = static_cast<std::uint64_t>(std::ceil(std::sqrt(s)));
  }
  return std::clamp<std::uint64_t>(m_q, 1, value_count);
}

Mlp::Mlp(std::uint32_t input_dim, std::span<const std::uint32_t> widths, bool relu_output,
         SplitMix64& rng)
    : relu_output_(relu_output) {
  if (widths.empty()) throw std::invalid_argument("Mlp: need at least one layer");
  std::uint32_t in = input_dim;
  for (std::uint32_t width : widths) {
    if (width == 0) throw std::invalid_argument("Mlp: zero-width layer");
    MlpLayer layer;
    layer.w.resize(width, in);
    layer.b = Eigen::VectorXd::Zero(width);
    const double scale = in > 0 ? 1.0 / std::sqrt(static_cast<double>(in)) : 1.0;
    for (Eigen::Index r = 0; r < layer.w.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.w.cols(); ++c) {
        layer.w(r, c) = rng.next_symmetric(scale);
      }
    }
    layers_.push_back(std::move(layer));
    in = width;
  }
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& x,
                             std::vector<Eigen::MatrixXd>* post_activations) const {
  if (post_activations) {
    post_activations->clear();
    post_activations->reserve(layers_.size());
  }
  Eigen::MatrixXd h = x;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Eigen::MatrixXd z = (h * layers_[l].w.transpose()).rowwise() + layers_[l].b.transpose();
    if (relu_output_ || l + 1 < layers_.size()) z = z.cwiseMax(0.0);
    if (post_activations) post_activations->push_back(z);
    h = std::move(z);
  }
  return h;
}

Eigen::MatrixXd Mlp::backward(const Eigen::MatrixXd& x,
                              const std::vector<Eigen::MatrixXd>& post_activations,
                              const Eigen::MatrixXd& dout, MlpGradients& grads) const {
  if (post_activations.size() != layers_.size()) {
    throw std::invalid_argument("Mlp::backward: stale activation cache");
  }
  grads.dw.resize(layers_.size());
  grads.db.resize(layers_.size());
  Eigen::MatrixXd delta = dout;
  for (std::size_t l = layers_.size(); l-- > 0;) {
    const bool activated = relu_output_ || l + 1 < layers_.size();
    if (activated) {
      delta = delta.cwiseProduct(
          (post_activations[l].array() > 0.0).cast<double>().matrix());
    }
    const Eigen::MatrixXd& input = l == 0 ? x : post_activations[l - 1];
    grads.dw[l] = delta.transpose() * input;
    grads.db[l] = delta.colwise().sum().transpose();
    delta = delta * layers_[l].w;
  }
  return delta;  // dL/dx
}

void Mlp::apply(const MlpGradients& grads, double lr) {
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    layers_[l].w -= lr * grads.dw[l];
    layers_[l].b -= lr * grads.db[l];
  }
}

std::uint64_t Mlp::parameter_count() const {
  std::uint64_t total = 0;
  for (const auto& layer : layers_) {
    total += static_cast<std::uint64_t>(layer.w.size()) + layer.b.size();
  }
  return total;
}

std::uint32_t Mlp::output_dim() const {
  return layers_.empty() ? 0 : static_cast<std::uint32_t>(layers_.back().w.rows());
}

void Mlp::append_flat(std::vector<double>& out) const {
  for (const auto& layer : layers_) {
    for (Eigen::Index r = 0; r < layer.w.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.w.cols(); ++c) out.push_back(layer.w(r, c));
    }
    for (Eigen::Index r = 0; r < layer.b.size(); ++r) out.push_back(layer.b(r));
  }
}

struct CtrModel::ForwardCache {
  std::vector<Eigen::MatrixXd> bottom_acts;
  Eigen::MatrixXd top_input;
  std::vector<Eigen::MatrixXd> top_acts;
  Eigen::VectorXd logits;
  struct FeatureCache {
    std::vector<Eigen::Index> present;  // batch positions with a value
    LocationMatrix locations;           // memory-backed schemes
    std::vector<std::pair<std::uint64_t, std::uint64_t>> qr_jk;
  };
  std::vector<FeatureCache> features;
};

CtrModel::CtrModel(const ModelConfig& config, std::uint32_t dense_cols, std::uint32_t cat_cols,
                   std::uint64_t value_count, const OccurrenceIndex* index)
    : config_(config),
      dense_cols_(dense_cols),
      cat_cols_(cat_cols),
      value_count_(value_count),
      index_(index) {
  if (config_.top_widths.empty() || config_.top_widths.back() != 1) {
    throw std::invalid_argument("CtrModel: top MLP must end in a single logit");
  }
  if (config_.batch_size == 0) throw std::invalid_argument("CtrModel: batch_size must be >= 1");

  const std::uint64_t m = config_.resolve_budget(value_count_);
  const MemoryInitSpec train_init{MemoryInit::kUniformSymmetric,
                                  std::sqrt(1.0 / static_cast<double>(config_.dim))};
  switch (config_.embedding) {
    case EmbeddingKind::kFull: {
      SchemeConfig sc{SchemeVariant::kFull, config_.dim, m, config_.sparse_threshold,
                      derive_seed(config_.seed, 13), config_.power};
      scheme_.emplace(sc, value_count_);
      memory_ = std::make_unique<SharedMemory>(m, train_init, derive_seed(config_.seed, 10));
      break;
    }
    case EmbeddingKind::kNaiveHash: {
      SchemeConfig sc{SchemeVariant::kNaiveHash, config_.dim, m, config_.sparse_threshold,
                      derive_seed(config_.seed, 13), config_.power};
      scheme_.emplace(sc);
      memory_ = std::make_unique<SharedMemory>(m, train_init, derive_seed(config_.seed, 10));
      break;
    }
    case EmbeddingKind::kLma: {
      if (!index_) throw std::invalid_argument("CtrModel: LMA needs an occurrence index");
      SchemeConfig sc{SchemeVariant::kLma, config_.dim, m, config_.sparse_threshold,
                      derive_seed(config_.seed, 13), config_.power};
      scheme_.emplace(sc);
      memory_ = std::make_unique<SharedMemory>(m, train_init, derive_seed(config_.seed, 10));
      break;
    }
    case EmbeddingKind::kQr: {
      const std::uint64_t m_q = QrEmbedding::choose_partition(m, value_count_, config_.dim);
      const auto rows2 = static_cast<Eigen::Index>((value_count_ + m_q - 1) / m_q);
      qr_ = std::make_unique<QrEmbedding>();
      qr_->table1.resize(static_cast<Eigen::Index>(m_q), config_.dim);
      qr_->table2.resize(rows2, config_.dim);
      // Scale so the element-wise product has the same variance as the
      // uniform-symmetric shared-memory init.
      const double scale = std::pow(3.0 / static_cast<double>(config_.dim), 0.25);
      SplitMix64 rng(derive_seed(config_.seed, 14));
      for (Eigen::Index r = 0; r < qr_->table1.rows(); ++r) {
        for (Eigen::Index c = 0; c < qr_->table1.cols(); ++c) {
          qr_->table1(r, c) = rng.next_symmetric(scale);
        }
      }
      for (Eigen::Index r = 0; r < qr_->table2.rows(); ++r) {
        for (Eigen::Index c = 0; c < qr_->table2.cols(); ++c) {
          qr_->table2(r, c) = rng.next_symmetric(scale);
        }
      }
      break;
    }
  }

  SplitMix64 bottom_rng(derive_seed(config_.seed, 11));
  bottom_ = Mlp(dense_cols_, config_.bottom_widths, /*relu_output=*/true, bottom_rng);
  SplitMix64 top_rng(derive_seed(config_.seed, 12));
  const std::uint32_t top_in = bottom_.output_dim() + cat_cols_ * config_.dim;
  top_ = Mlp(top_in, config_.top_widths, /*relu_output=*/false, top_rng);
}

std::span<const SampleId> CtrModel::occurrences_of(ValueId v) const {
  if (config_.embedding == EmbeddingKind::kLma) return index_->occurrences(v);
  return {};
}

void CtrModel::run_forward(const Batch& batch, ForwardCache& cache) const {
  const auto b = static_cast<Eigen::Index>(batch.size());
  if (batch.cat_cols != cat_cols_) throw std::invalid_argument("forward: feature count mismatch");

  const Eigen::MatrixXd bottom_out = bottom_.forward(batch.dense, &cache.bottom_acts);
  const std::uint32_t d = config_.dim;
  cache.top_input = Eigen::MatrixXd::Zero(b, bottom_.output_dim() + cat_cols_ * d);
  cache.top_input.leftCols(bottom_.output_dim()) = bottom_out;

  cache.features.assign(cat_cols_, {});
  for (std::uint32_t f = 0; f < cat_cols_; ++f) {
    auto& fc = cache.features[f];
    const Eigen::Index offset = bottom_.output_dim() + static_cast<Eigen::Index>(f) * d;
    for (Eigen::Index i = 0; i < b; ++i) {
      const ValueId v = batch.cat_at(static_cast<std::size_t>(i), f);
      if (v == kMissingValue) continue;  // zero embedding
      if (v >= value_count_) {
        throw std::out_of_range("forward: unregistered value id " + std::to_string(v));
      }
      fc.present.push_back(i);
      if (qr_) {
        const std::uint64_t m_q = qr_->partition();
        fc.qr_jk.emplace_back(v % m_q, v / m_q);
        cache.top_input.block(i, offset, 1, d) = qr_->lookup(v);
      } else {
        fc.locations.values.push_back(v);
        fc.locations.rows.push_back(scheme_->allocate(v, occurrences_of(v)));
      }
    }
    if (!qr_ && !fc.present.empty()) {
      fc.locations.dim = d;
      const Eigen::MatrixXd embeddings = gather(*memory_, fc.locations);
      for (std::size_t k = 0; k < fc.present.size(); ++k) {
        cache.top_input.block(fc.present[k], offset, 1, d) =
            embeddings.row(static_cast<Eigen::Index>(k));
      }
    }
  }
  cache.logits = top_.forward(cache.top_input, &cache.top_acts).col(0);
}

Eigen::VectorXd CtrModel::forward(const Batch& batch) const {
  ForwardCache cache;
  run_forward(batch, cache);
  Eigen::VectorXd probs(cache.logits.size());
  for (Eigen::Index i = 0; i < probs.size(); ++i) probs(i) = sigmoid(cache.logits(i));
  return probs;
}

double CtrModel::loss_only(const Batch& batch) const {
  ForwardCache cache;
  run_forward(batch, cache);
  double loss = 0.0;
  for (Eigen::Index i = 0; i < cache.logits.size(); ++i) {
    loss += bce_from_logit(cache.logits(i), batch.labels[static_cast<std::size_t>(i)]);
  }
  return loss / static_cast<double>(batch.size());
}

std::pair<double, CtrModel::Gradients> CtrModel::compute_gradients(
    const Batch& batch, Eigen::VectorXd* logits_out) const {
  ForwardCache cache;
  run_forward(batch, cache);
  const auto b = static_cast<Eigen::Index>(batch.size());
  if (logits_out) *logits_out = cache.logits;

  double loss = 0.0;
  Eigen::MatrixXd dlogit(b, 1);
  for (Eigen::Index i = 0; i < b; ++i) {
    const double y = batch.labels[static_cast<std::size_t>(i)];
    const double z = cache.logits(i);
    loss += bce_from_logit(z, y);
    dlogit(i, 0) = (sigmoid(z) - y) / static_cast<double>(b);
  }
  loss /= static_cast<double>(b);
  if (!std::isfinite(loss)) throw std::runtime_error("backward_step: non-finite loss");

  Gradients grads;
  const Eigen::MatrixXd dtop_input =
      top_.backward(cache.top_input, cache.top_acts, dlogit, grads.top);
  const Eigen::MatrixXd dbottom_out = dtop_input.leftCols(bottom_.output_dim());
  bottom_.backward(batch.dense, cache.bottom_acts, dbottom_out, grads.bottom);

  const std::uint32_t d = config_.dim;
  if (qr_) {
    grads.qr1 = Eigen::MatrixXd::Zero(qr_->table1.rows(), qr_->table1.cols());
    grads.qr2 = Eigen::MatrixXd::Zero(qr_->table2.rows(), qr_->table2.cols());
  } else {
    grads.memory.assign(memory_->budget(), 0.0);
  }
  for (std::uint32_t f = 0; f < cat_cols_; ++f) {
    const auto& fc = cache.features[f];
    if (fc.present.empty()) continue;
    const Eigen::Index offset = bottom_.output_dim() + static_cast<Eigen::Index>(f) * d;
    if (qr_) {
      for (std::size_t k = 0; k < fc.present.size(); ++k) {
        const auto [j, q] = fc.qr_jk[k];
        const Eigen::RowVectorXd g = dtop_input.block(fc.present[k], offset, 1, d);
        grads.qr1.row(static_cast<Eigen::Index>(j)) +=
            g.cwiseProduct(qr_->table2.row(static_cast<Eigen::Index>(q)));
        grads.qr2.row(static_cast<Eigen::Index>(q)) +=
            g.cwiseProduct(qr_->table1.row(static_cast<Eigen::Index>(j)));
      }
    } else {
      Eigen::MatrixXd dembed(static_cast<Eigen::Index>(fc.present.size()), d);
      for (std::size_t k = 0; k < fc.present.size(); ++k) {
        dembed.row(static_cast<Eigen::Index>(k)) = dtop_input.block(fc.present[k], offset, 1, d);
      }
      scatter_add(fc.locations, dembed, grads.memory);
    }
  }
  return {loss, std::move(grads)};
}

void CtrModel::apply_gradients(const Gradients& grads, double lr) {
  bottom_.apply(grads.bottom, lr);
  top_.apply(grads.top, lr);
  if (qr_) {
    qr_->table1 -= lr * grads.qr1;
    qr_->table2 -= lr * grads.qr2;
  } else {
    auto params = memory_->params();
    for (std::size_t i = 0; i < params.size(); ++i) params[i] -= lr * grads.memory[i];
  }
}

double CtrModel::backward_step(const Batch& batch) {
  auto [loss, grads] = compute_gradients(batch);
  apply_gradients(grads, config_.learning_rate);
  return loss;
}

Metrics CtrModel::evaluate(const EncodedTable& table, std::span<const std::uint32_t> rows) const {
  if (rows.empty()) throw std::invalid_argument("evaluate: empty dataset");
  Metrics metrics;
  std::vector<double> scores;
  std::vector<std::uint8_t> labels;
  scores.reserve(rows.size());
  labels.reserve(rows.size());
  double loss_sum = 0.0;
  std::uint64_t correct = 0;

  for (std::size_t start = 0; start < rows.size(); start += config_.batch_size) {
    const std::size_t end = std::min(rows.size(), start + config_.batch_size);
    const Batch batch = make_batch(table, rows.subspan(start, end - start));
    ForwardCache cache;
    run_forward(batch, cache);
    for (Eigen::Index i = 0; i < cache.logits.size(); ++i) {
      const double z = cache.logits(i);
      const std::uint8_t y = batch.labels[static_cast<std::size_t>(i)];
      loss_sum += bce_from_logit(z, y);
      correct += (z >= 0.0) == (y != 0) ? 1 : 0;
      scores.push_back(sigmoid(z));
      labels.push_back(y);
    }
  }
  metrics.loss = loss_sum / static_cast<double>(rows.size());
  metrics.accuracy = static_cast<double>(correct) / static_cast<double>(rows.size());
  metrics.auc = roc_auc(scores, labels);
  return metrics;
}

std::uint64_t CtrModel::params_memory() const {
  if (qr_) return qr_->parameter_count();
  return memory_->budget();
}

std::uint64_t CtrModel::params_total() const {
  return params_memory() + bottom_.parameter_count() + top_.parameter_count();
}

void CtrModel::save_checkpoint(const std::filesystem::path& prefix) const {
  if (memory_) {
    memory_->save(prefix.string() + "_memory.bin");
  }
  {
    std::vector<double> flat;
    bottom_.append_flat(flat);
    top_.append_flat(flat);
    if (qr_) {
      for (Eigen::Index r = 0; r < qr_->table1.rows(); ++r) {
        for (Eigen::Index c = 0; c < qr_->table1.cols(); ++c) flat.push_back(qr_->table1(r, c));
      }
      for (Eigen::Index r = 0; r < qr_->table2.rows(); ++r) {
        for (Eigen::Index c = 0; c < qr_->table2.cols(); ++c) flat.push_back(qr_->table2(r, c));
      }
    }
    const std::filesystem::path path(prefix.string() + "_mlp.bin");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out.write(kMlpMagic, sizeof(kMlpMagic));
    detail::put_u64(out, flat.size());
    for (double v : flat) detail::put_f64(out, v);
  }
  {
    nlohmann::json j{{"config", config_},
                     {"dense_cols", dense_cols_},
                     {"cat_cols", cat_cols_},
                     {"value_count", value_count_},
                     {"params_total", params_total()},
                     {"params_memory", params_memory()}};
    std::ofstream out(prefix.string() + "_config.json");
    if (!out) throw std::runtime_error("cannot write model config json");
    out << j.dump(2) << '\n';
  }
}

void to_json(nlohmann::json& j, const EpochRecord& r) {
  j = nlohmann::json{{"epoch", r.epoch},
                     {"split", r.split},
                     {"loss", r.loss},
                     {"accuracy", r.accuracy},
                     {"auc", r.auc ? nlohmann::json(*r.auc) : nlohmann::json()},
                     {"params_total", r.params_total},
                     {"params_memory", r.params_memory},
                     {"wall_ms", r.wall_ms}};
}

TrainResult train(const ModelConfig& config, const EncodedTable& train_table,
                  const EncodedTable& test_table, const OccurrenceIndex* full_index,
                  const std::function<void(const EpochRecord&)>& sink, bool timing) {
  if (!full_index) throw std::invalid_argument("train: occurrence index required");
  if (train_table.rows == 0 || test_table.rows == 0) {
    throw std::invalid_argument("train: empty split");
  }
  const std::uint64_t value_count = full_index->value_count();

  // LMA allocates from the i.i.d. subsample D' of the training occurrences.
  OccurrenceIndex dprime;
  const OccurrenceIndex* model_index = nullptr;
  if (config.embedding == EmbeddingKind::kLma) {
    SubsampleSpec spec;
    spec.sample_count = static_cast<std::uint32_t>(
        std::min<std::uint64_t>(config.subsample_rows, full_index->sample_count()));
    spec.seed = derive_seed(config.seed, 2);
    dprime = subsample(*full_index, spec);
    model_index = &dprime;
  }

  CtrModel model(config, train_table.dense_cols, train_table.cat_cols, value_count, model_index);

  TrainResult result;
  result.params_total = model.params_total();
  result.params_memory = model.params_memory();
  result.resolved_budget = config.embedding == EmbeddingKind::kQr
                               ? 0
                               : config.resolve_budget(value_count);
  if (config.embedding == EmbeddingKind::kLma) {
    for (ValueId v = 0; v < value_count; ++v) {
      if (dprime.occurrence_count(v) < config.sparse_threshold) ++result.fallback_values;
    }
  }

  std::vector<std::uint32_t> test_rows(test_table.rows);
  std::iota(test_rows.begin(), test_rows.end(), 0u);
  std::vector<std::uint32_t> train_rows(train_table.rows);
  std::iota(train_rows.begin(), train_rows.end(), 0u);

  using Clock = std::chrono::steady_clock;
  auto emit = [&](EpochRecord record) {
    record.params_total = result.params_total;
    record.params_memory = result.params_memory;
    if (sink) sink(record);
    result.records.push_back(std::move(record));
  };

  {
    const auto t0 = Clock::now();
    const Metrics m = model.evaluate(test_table, test_rows);
    EpochRecord record{0, "test", m.loss, m.accuracy, m.auc};
    if (timing) {
      record.wall_ms = static_cast<std::uint64_t>(
          std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - t0).count());
    }
    emit(std::move(record));
  }

  for (std::uint32_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto t0 = Clock::now();
    SplitMix64 shuffle_rng(derive_seed(config.seed, 1000 + epoch));
    for (std::size_t i = train_rows.size(); i-- > 1;) {
      const std::uint64_t j = shuffle_rng.uniform_below(i + 1);
      std::swap(train_rows[i], train_rows[j]);
    }

    double loss_sum = 0.0;
    std::uint64_t seen = 0, correct = 0;
    for (std::size_t start = 0; start < train_rows.size(); start += config.batch_size) {
      const std::size_t end = std::min(train_rows.size(), start + config.batch_size);
      const Batch batch = make_batch(
          train_table, std::span<const std::uint32_t>(train_rows).subspan(start, end - start));
      Eigen::VectorXd logits;
      auto [loss, grads] = model.compute_gradients(batch, &logits);
      model.apply_gradients(grads, config.learning_rate);
      loss_sum += loss * static_cast<double>(batch.size());
      seen += batch.size();
      for (Eigen::Index i = 0; i < logits.size(); ++i) {
        correct += (logits(i) >= 0.0) == (batch.labels[static_cast<std::size_t>(i)] != 0) ? 1 : 0;
      }
    }

    EpochRecord train_record{epoch, "train", loss_sum / static_cast<double>(seen),
                             static_cast<double>(correct) / static_cast<double>(seen),
                             std::nullopt};
    const Metrics m = model.evaluate(test_table, test_rows);
    EpochRecord test_record{epoch, "test", m.loss, m.accuracy, m.auc};
    if (timing) {
      const auto ms = static_cast<std::uint64_t>(
          std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - t0).count());
      train_record.wall_ms = ms;
      test_record.wall_ms = ms;
    }
    emit(std::move(train_record));
    emit(std::move(test_record));
  }
  return result;
}

}  // namespace lma
