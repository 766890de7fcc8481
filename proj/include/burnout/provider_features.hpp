#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "burnout/errors.hpp"
#include "burnout/ingestion.hpp"
#include "burnout/preprocess.hpp"
#include "burnout/sentiment.hpp"
#include "burnout/stress_lexicon.hpp"
#include "burnout/topics.hpp"

namespace burnout::features {

/// Per-provider means of the note-level linguistic metrics.
struct LinguisticMeans {
  double word_count = 0.0;
  double sentence_count = 0.0;
  double avg_token_length = 0.0;
  double type_token_ratio = 0.0;
  double first_person_freq = 0.0;
  double third_person_freq = 0.0;
};

struct ProviderProfile {
  std::string provider_id;
  std::string specialty;
  std::size_t note_count = 0;
  sentiment::ProviderSentiment sentiment;
  stress::ProviderStress stress;
  Eigen::VectorXd topic_weights;
  std::vector<std::pair<std::size_t, double>> top2;
  ingestion::WorkloadRecord workload;
  bool workload_missing = false;
  LinguisticMeans linguistic;
  bool silver_label = false;
};

/// Documented feature order; this is also the column order of profiles.csv.
/// Length is 27 + topic_count.
std::vector<std::string> feature_names(int topic_count);

/// Features read by the labeling rule. Excluded from the classifier unless
/// include_label_inputs is set.
const std::vector<std::string>& label_input_features();

std::vector<std::string> classifier_feature_names(int topic_count, bool include_label_inputs);

/// Full feature vector in feature_names() order.
Eigen::VectorXd feature_vector(const ProviderProfile& profile);

/// Rows = profiles, columns = the requested subset of feature_names().
Eigen::MatrixXd feature_matrix(const std::vector<ProviderProfile>& profiles,
                               const std::vector<std::string>& names);

struct NoteRecord {
  std::string note_id;
  std::string provider_id;
  std::string specialty;
  preprocess::LinguisticMetrics metrics;
};

struct FuseInputs {
  int topic_count = 5;
  std::vector<NoteRecord> notes;
  std::map<std::string, sentiment::ProviderSentiment> sentiment;
  std::map<std::string, stress::ProviderStress> stress;
  std::vector<topics::ProviderTopicProfile> topics;
  ingestion::WorkloadMap workload;
};

struct FuseResult {
  std::vector<ProviderProfile> profiles;     // sorted by provider_id
  std::vector<std::string> workload_only;    // workload rows without notes
};

/// One profile per provider with at least one note. Missing workload gives
/// zeros plus workload_missing; missing topic profiles give uniform weights.
FuseResult fuse(const FuseInputs& inputs, Warnings* warnings = nullptr);

enum class LabelUnit { Sentences, Notes };

struct LabelRule {
  std::size_t t_sentences = 12;
  std::size_t t_mentions = 7;
  /// Sentences: high-confidence negative sentences. Notes: high-severity notes.
  LabelUnit unit = LabelUnit::Sentences;
};

bool silver_label(const ProviderProfile& profile, const LabelRule& rule = {});

struct LabelSummary {
  std::vector<std::string> flagged;
  double flag_rate = 0.0;
};

/// Applies the rule to every profile (updating silver_label). Throws
/// DataError on an empty list.
LabelSummary label_corpus(std::vector<ProviderProfile>& profiles, const LabelRule& rule = {});

/// Mapping placeholder for the two most prevalent topics among flagged providers.
inline constexpr std::string_view kFlaggedTopicsToken = "@flagged_top_topics";

struct MbiMapping {
  std::vector<std::pair<std::string, std::vector<std::string>>> dimensions;

  /// Emotional Exhaustion, Depersonalization, Reduced Personal Accomplishment.
  static MbiMapping default_mapping();
};

/// Expands the topic placeholder and checks every name against the profile
/// schema; a feature may belong to one dimension only. Throws ConfigError.
MbiMapping resolve_mapping(const MbiMapping& mapping, const std::vector<ProviderProfile>& profiles,
                           int topic_count);

struct MbiSummaryRow {
  std::string dimension;
  std::string feature;
  double mean_flagged = 0.0;
  double mean_unflagged = 0.0;
  double mean_all = 0.0;
};

struct MbiReport {
  MbiMapping mapping;  // resolved
  /// provider_id -> per-dimension values, in mapping order.
  std::map<std::string, std::vector<std::vector<double>>> provider_values;
  std::vector<MbiSummaryRow> summary;
};

MbiReport mbi_report(const std::vector<ProviderProfile>& profiles, const MbiMapping& mapping,
                     int topic_count);

/// profiles.csv text: provider_id, specialty, features..., top-two topics, silver_label.
std::string profiles_csv(const std::vector<ProviderProfile>& profiles, int topic_count);

/// profiles.csv read back as an id list plus the full feature matrix.
struct ProfileTable {
  std::vector<std::string> provider_ids;
  std::vector<std::string> specialties;
  std::vector<std::string> names;
  Eigen::MatrixXd values;

  Eigen::MatrixXd columns(const std::vector<std::string>& subset) const;
};

ProfileTable parse_profiles_csv(std::string_view text);

}  // namespace burnout::features
