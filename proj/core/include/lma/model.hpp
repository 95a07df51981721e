#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "lma/allocation.hpp"
#include "lma/memory_table.hpp"
#include "lma/semantics.hpp"

#include "json.hpp"

namespace lma {

// Embedding serving variants. The first three are AllocationScheme-backed
// lookups into one common SharedMemory; QR is the two-table compositional
// baseline with its own storage.
enum class EmbeddingKind : std::uint8_t { kFull, kNaiveHash, kLma, kQr };

std::string to_string(EmbeddingKind k);
EmbeddingKind embedding_kind_from_string(std::string_view name);

struct ModelConfig {
  EmbeddingKind embedding = EmbeddingKind::kLma;
  std::uint32_t dim = 32;
  // Exactly one of budget (m) or expansion_rate (alpha, m = ceil(|S| d / alpha))
  // for the budgeted schemes; full ignores both.
  std::optional<std::uint64_t> budget;
  std::optional<double> expansion_rate;
  std::uint32_t power = 4;             // n_h
  std::uint32_t sparse_threshold = 5;  // tau
  std::vector<std::uint32_t> bottom_widths{16, 16};
  std::vector<std::uint32_t> top_widths{64, 32, 1};  // final width must be 1
  double learning_rate = 0.1;
  std::uint32_t batch_size = 256;
  std::uint32_t epochs = 3;
  std::uint64_t seed = 42;
  std::uint32_t subsample_rows = 125000;  // n_s for the allocation subsample D'

  // m for a budgeted scheme given the registry size.
  std::uint64_t resolve_budget(std::uint64_t value_count) const;
};

void to_json(nlohmann::json& j, const ModelConfig& c);
void from_json(const nlohmann::json& j, ModelConfig& c);

struct Batch {
  Eigen::MatrixXd dense;             // B x p
  std::vector<ValueId> cats;         // B x q, row-major
  std::vector<std::uint8_t> labels;  // B
  std::uint32_t cat_cols = 0;

  std::size_t size() const { return labels.size(); }
  ValueId cat_at(std::size_t b, std::uint32_t f) const { return cats[b * cat_cols + f]; }
};

Batch make_batch(const EncodedTable& table, std::span<const std::uint32_t> rows);

struct Metrics {
  double loss = 0.0;
  double accuracy = 0.0;
  std::optional<double> auc;  // absent when only one label class is present
};

// Rank-statistic ROC-AUC with midrank tie handling; nullopt for single-class input.
std::optional<double> roc_auc(std::span<const double> scores,
                              std::span<const std::uint8_t> labels);

// Quotient-remainder compositional embedding: value v maps to
// table1[v mod m_q] (*) table2[v div m_q], element-wise.
struct QrEmbedding {
  Eigen::MatrixXd table1;  // m_q x d, indexed by remainder
  Eigen::MatrixXd table2;  // ceil(|S| / m_q) x d, indexed by quotient

  std::uint64_t partition() const { return static_cast<std::uint64_t>(table1.rows()); }
  Eigen::RowVectorXd lookup(ValueId v) const;
  std::uint64_t parameter_count() const {
    return static_cast<std::uint64_t>(table1.size() + table2.size());
  }

  // Largest m_q whose two tables fit the budget (balancing the quadratic
  // m_q d + ceil(S/m_q) d = m); falls back to ceil(sqrt(S)) when the budget
  // cannot hold both tables at this d.
  static std::uint64_t choose_partition(std::uint64_t budget, std::uint64_t value_count,
                                        std::uint32_t dim);
};

struct MlpLayer {
  Eigen::MatrixXd w;  // out x in
  Eigen::VectorXd b;
};

struct MlpGradients {
  std::vector<Eigen::MatrixXd> dw;
  std::vector<Eigen::VectorXd> db;
};

class Mlp {
 public:
  Mlp() = default;
  // Weights uniform in +-1/sqrt(fan_in), biases zero. ReLU between layers;
  // `relu_output` also activates the last layer (bottom stack yes, top no).
  Mlp(std::uint32_t input_dim, std::span<const std::uint32_t> widths, bool relu_output,
      SplitMix64& rng);

  Eigen::MatrixXd forward(const Eigen::MatrixXd& x,
                          std::vector<Eigen::MatrixXd>* post_activations = nullptr) const;
  // dout is dL/d(output); returns dL/dx and fills grads.
  Eigen::MatrixXd backward(const Eigen::MatrixXd& x,
                           const std::vector<Eigen::MatrixXd>& post_activations,
                           const Eigen::MatrixXd& dout, MlpGradients& grads) const;
  void apply(const MlpGradients& grads, double lr);

  std::uint64_t parameter_count() const;
  std::vector<MlpLayer>& layers() { return layers_; }
  const std::vector<MlpLayer>& layers() const { return layers_; }
  std::uint32_t output_dim() const;

  void append_flat(std::vector<double>& out) const;

 private:
  std::vector<MlpLayer> layers_;
  bool relu_output_ = false;
};

// Dense-feature MLP + categorical embeddings served from one common memory
// (or QR tables), concatenated into a top MLP with a sigmoid output, trained
// with plain SGD on binary cross-entropy. Missing categorical cells contribute
// a zero embedding and receive no gradient.
class CtrModel {
 public:
  struct Gradients {
    MlpGradients bottom, top;
    std::vector<double> memory;     // length m for memory-backed schemes
    Eigen::MatrixXd qr1, qr2;       // QR only
  };

  // `index` is the allocation substrate (D'); required for LMA, ignored
  // otherwise. The pointer must outlive the model.
  CtrModel(const ModelConfig& config, std::uint32_t dense_cols, std::uint32_t cat_cols,
           std::uint64_t value_count, const OccurrenceIndex* index);

  Eigen::VectorXd forward(const Batch& batch) const;  // probabilities in (0,1)
  double loss_only(const Batch& batch) const;
  std::pair<double, Gradients> compute_gradients(const Batch& batch,
                                                 Eigen::VectorXd* logits_out = nullptr) const;
  void apply_gradients(const Gradients& grads, double lr);
  double backward_step(const Batch& batch);  // one SGD step, returns the loss

  Metrics evaluate(const EncodedTable& table, std::span<const std::uint32_t> rows) const;

  std::uint64_t params_memory() const;
  std::uint64_t params_total() const;

  const ModelConfig& config() const { return config_; }
  Mlp& bottom() { return bottom_; }
  Mlp& top() { return top_; }
  SharedMemory* memory() { return memory_ ? memory_.get() : nullptr; }
  QrEmbedding* qr() { return qr_ ? qr_.get() : nullptr; }

  // Memory checkpoint (memory_table format) or QR/MLP weights as flat binary,
  // plus a JSON config; files are <prefix>_memory.bin(.json), <prefix>_mlp.bin,
  // <prefix>_config.json.
  void save_checkpoint(const std::filesystem::path& prefix) const;

 private:
  struct ForwardCache;
  void run_forward(const Batch& batch, ForwardCache& cache) const;
  std::span<const SampleId> occurrences_of(ValueId v) const;

  ModelConfig config_;
  std::uint32_t dense_cols_ = 0;
  std::uint32_t cat_cols_ = 0;
  std::uint64_t value_count_ = 0;
  const OccurrenceIndex* index_ = nullptr;

  std::optional<AllocationScheme> scheme_;
  std::unique_ptr<SharedMemory> memory_;
  std::unique_ptr<QrEmbedding> qr_;
  Mlp bottom_, top_;
};

struct EpochRecord {
  std::uint32_t epoch = 0;
  std::string split;  // "train" (online minibatch metrics) or "test" (full pass)
  double loss = 0.0;
  double accuracy = 0.0;
  std::optional<double> auc;
  std::uint64_t params_total = 0;
  std::uint64_t params_memory = 0;
  std::uint64_t wall_ms = 0;
};

void to_json(nlohmann::json& j, const EpochRecord& r);

struct TrainResult {
  std::vector<EpochRecord> records;
  std::uint64_t params_total = 0;
  std::uint64_t params_memory = 0;
  std::uint64_t resolved_budget = 0;  // m actually used (0 for QR-only bookkeeping)
  std::uint64_t fallback_values = 0;  // LMA values served by the hashing trick
};

// Shuffled mini-batch SGD over `train`, evaluating on `test` after each epoch.
// Record order: epoch-0 test evaluation of the initialized model, then per
// epoch one online train record and one test record. `full_index` is the
// occurrence index over the training rows; LMA subsamples it to n_s. When
// `timing` is false each record's wall_ms is 0, keeping logs byte-stable.
TrainResult train(const ModelConfig& config, const EncodedTable& train_table,
                  const EncodedTable& test_table, const OccurrenceIndex* full_index,
                  const std::function<void(const EpochRecord&)>& sink = {}, bool timing = true);

}  // namespace lma
