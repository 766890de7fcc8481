#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "burnout/errors.hpp"
#include "burnout/preprocess.hpp"
#include "burnout/rng.hpp"

namespace burnout::topics {

/// Unigrams and within-sentence bigrams ("a_b") ranked by corpus-count x idf.
struct Vocabulary {
  std::vector<std::string> terms;  // index order = rank order
  std::map<std::string, std::size_t> index;
  std::vector<std::size_t> df;
  std::vector<double> tfidf_weight;

  std::size_t size() const { return terms.size(); }
  std::optional<std::size_t> find(const std::string& term) const;
};

Vocabulary build_vocabulary(const std::vector<preprocess::CleanNote>& notes, std::size_t top_k,
                            std::size_t min_df, Warnings* warnings = nullptr);

/// A document as a sequence of vocabulary indices.
struct Document {
  std::string id;
  std::vector<int> terms;
};

/// Emits, per sentence position, the unigram (if retained) followed by the
/// bigram starting there (if retained).
std::vector<Document> to_documents(const std::vector<preprocess::CleanNote>& notes,
                                   const Vocabulary& vocab);

struct LdaParams {
  int topics = 5;
  double alpha = 0.1;
  double beta = 0.01;
  int iterations = 1000;
  std::uint64_t seed = 42;

  void validate() const;
};

/// Sampler state: assignments and the three count tables they imply.
struct LdaState {
  int topics = 0;
  double alpha = 0.0;
  double beta = 0.0;
  std::uint64_t rng_seed = 0;
  std::vector<std::string> doc_ids;
  std::vector<std::vector<int>> words;  // per retained document
  std::vector<std::vector<int>> z;      // topic per token
  Eigen::MatrixXi n_dk;                 // D x K
  Eigen::MatrixXi n_kw;                 // K x V
  Eigen::VectorXi n_k;                  // K

  Eigen::Index vocab_size() const { return n_kw.cols(); }

  /// Recounts from `z` and compares with the stored tables.
  bool counts_consistent() const;
};

/// Topic-word estimate (n_kw + beta) / (n_k + V beta), K x V.
template <typename Scalar = double>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> estimate_phi(const LdaState& s) {
  const Scalar beta = static_cast<Scalar>(s.beta);
  const Scalar vb = static_cast<Scalar>(s.vocab_size()) * beta;
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> phi = s.n_kw.cast<Scalar>().array() + beta;
  const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> denom = s.n_k.cast<Scalar>().array() + vb;
  return phi.array().colwise() / denom.array();
}

/// Doc-topic estimate (n_dk + alpha) / (len_d + K alpha), D x K.
template <typename Scalar = double>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> estimate_theta(const LdaState& s) {
  const Scalar alpha = static_cast<Scalar>(s.alpha);
  const Scalar ka = static_cast<Scalar>(s.topics) * alpha;
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> theta = s.n_dk.cast<Scalar>().array() + alpha;
  const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> denom =
      s.n_dk.rowwise().sum().cast<Scalar>().array() + ka;
  return theta.array().colwise() / denom.array();
}

/// Sequential collapsed Gibbs sampler for LDA.
///
/// Documents are swept in doc-id order and each document draws from its own
/// stream seeded by (seed, doc id), so reordering the input documents only
/// reorders the outputs.
class GibbsSampler {
 public:
  /// Empty documents are dropped with a warning. Throws ConfigError for bad
  /// parameters and DataError for duplicate ids or out-of-range terms.
  GibbsSampler(const std::vector<Document>& docs, std::size_t vocab_size, const LdaParams& params,
               Warnings* warnings = nullptr);

  /// Resamples every token once.
  void sweep();

  const LdaState& state() const { return state_; }
  int sweeps_done() const { return sweeps_; }

 private:
  LdaState state_;
  std::vector<std::size_t> order_;  // document visit order
  std::vector<Rng> streams_;  // one per retained document
  std::vector<double> weights_;
  int sweeps_ = 0;
};

struct TopicModel {
  Eigen::MatrixXd phi;    // K x V
  Eigen::MatrixXd theta;  // D x K, rows follow doc_ids
  std::vector<std::string> doc_ids;
  std::vector<double> coherence;
  std::vector<std::vector<std::size_t>> top_terms;
  LdaParams params;
};

struct FitResult {
  LdaState state;
  TopicModel model;
};

/// Runs `params.iterations` sweeps and takes the point estimate from the
/// final sweep. Coherence uses the `coherence_top_m` highest-phi terms.
FitResult gibbs_fit(const std::vector<Document>& docs, std::size_t vocab_size,
                    const LdaParams& params, std::size_t coherence_top_m = 10,
                    Warnings* warnings = nullptr);

/// Ranked term indices per topic (ties toward the lower index).
std::vector<std::vector<std::size_t>> top_terms(const Eigen::MatrixXd& phi, std::size_t m);

/// UMass coherence per topic: sum over ranked pairs of
/// ln((D(lower, higher) + 1) / D(higher)).
std::vector<double> umass_coherence(const std::vector<std::vector<std::size_t>>& ranked_terms,
                                    const std::vector<Document>& docs, std::size_t top_m);

struct TuneResult {
  double alpha = 0.0;
  double beta = 0.0;
  std::vector<double> mean_coherence;  // per grid point
};

std::vector<std::pair<double, double>> default_grid();

/// One fit per grid point (same seed); highest mean coherence wins, earliest
/// grid entry on ties. Grid points are fitted concurrently.
TuneResult tune_hyperparameters(const std::vector<Document>& docs, std::size_t vocab_size,
                                const LdaParams& base,
                                const std::vector<std::pair<double, double>>& grid,
                                std::size_t coherence_top_m = 10);

struct ProviderTopicProfile {
  std::string provider_id;
  Eigen::VectorXd mean_theta;
  /// Up to two (topic, weight) pairs, weight descending, lower index on ties.
  std::vector<std::pair<std::size_t, double>> top2;
};

/// Averages theta rows per provider. Providers listed in `providers` whose
/// documents were all dropped are skipped with a warning.
std::vector<ProviderTopicProfile> provider_topic_profiles(
    const TopicModel& model, const std::map<std::string, std::string>& provider_of,
    const std::vector<std::string>& providers, Warnings* warnings = nullptr);

/// Top-two entries of a weight vector per the profile tie rule.
std::vector<std::pair<std::size_t, double>> top_two(const Eigen::VectorXd& weights);

/// Text model dump: vocabulary.csv, phi.csv, theta.csv and model_meta.json.
void write_model(const std::filesystem::path& dir, const TopicModel& model, const Vocabulary& vocab);

}  // namespace burnout::topics
