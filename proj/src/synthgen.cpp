#include "burnout/synthgen.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

#include "burnout/errors.hpp"
#include "burnout/rng.hpp"
#include "burnout/text_io.hpp"

namespace burnout::synthgen {

namespace {

struct SpecialtySpec {
  const char* name;
  std::array<const char*, 2> services;
  int weight;
  int burnout_weight;
};

// Service spellings are chosen to exercise the shipped specialty_map.csv.
constexpr std::array<SpecialtySpec, 20> kSpecialties = {{
    {"Internal Medicine", {"MEDICINE", "MED"}, 20, 20},
    {"Cardiology", {"CMED", "CARDIOLOGY"}, 10, 10},
    {"General Surgery", {"SURGERY", "SURG"}, 10, 10},
    {"Neurosurgery", {"NSURG", "NEURO SURGERY"}, 4, 4},
    {"Neurology", {"NEUROLOGY", "NMED"}, 5, 20},
    {"Orthopaedics", {"ORTHOPAEDICS", "ORTHO"}, 5, 5},
    {"Obstetrics and Gynecology", {"OBSTETRICS", "GYN"}, 4, 4},
    {"Psychiatry", {"PSYCHIATRY", "PSYCH"}, 4, 16},
    {"Radiology", {"RADIOLOGY", "IR"}, 4, 16},
    {"Oncology", {"OMED", "ONCOLOGY"}, 5, 5},
    {"Urology", {"UROLOGY", "GU"}, 3, 3},
    {"Cardiothoracic Surgery", {"CSURG", "CARDIOTHORACIC"}, 4, 4},
    {"Vascular Surgery", {"VSURG", "VASCULAR"}, 3, 3},
    {"Plastic Surgery", {"PSURG", "PLASTIC"}, 2, 2},
    {"Trauma Surgery", {"TSURG", "TRAUMA"}, 3, 3},
    {"Otolaryngology", {"ENT", "ENT"}, 2, 2},
    {"Ophthalmology", {"EYE", "OPHTHALMOLOGY"}, 2, 2},
    {"Pulmonology", {"PULMONARY", "PULM"}, 4, 4},
    {"Gastroenterology", {"GI", "GASTROENTEROLOGY"}, 4, 4},
    {"Nephrology", {"RENAL", "NEPHROLOGY"}, 3, 3},
}};

// Words below appear in the shipped cue and stress lexicons.
constexpr std::array<const char*, 15> kNegativeCues = {
    "exhausted", "overwhelmed", "drained",  "frustrated", "hopeless",
    "stressed",  "depleted",    "miserable", "weary",     "defeated",
    "demoralized", "cynical",   "numb",      "detached",  "resentful"};
constexpr std::array<const char*, 8> kPositiveCues = {
    "improved", "comfortable", "stable", "grateful", "pleasant", "calm", "satisfied", "successful"};
constexpr std::array<const char*, 14> kStressPhrases = {
    "worked overtime",       "a double shift",    "short-staffed coverage", "an understaffed unit",
    "a documentation backlog", "more paperwork",  "moral distress",         "a high census",
    "a heavy workload",      "no sleep",          "overnight call",         "no beds available",
    "limited resources",     "a staffing shortage"};
constexpr std::array<const char*, 4> kNegativeOpeners = {"I feel", "I am", "We are", "Honestly I am"};
constexpr std::array<const char*, 3> kPositiveOpeners = {"Patient is", "Family is", "Patient remains"};
constexpr std::array<const char*, 4> kFillers = {
    "Patient was seen by Dr. ___ on [**2150-1-1**].",
    "Patient discharged home with family.",
    "Follow up with ___ clinic in 2 weeks.",
    "Medications reviewed with [**Name**] at bedside."};

template <typename T, std::size_t N>
const T& pick(const std::array<T, N>& items, Rng& rng) {
  return items[static_cast<std::size_t>(rng.index(N))];
}

std::size_t pick_weighted(const std::vector<std::uint64_t>& weights, Rng& rng) {
  const std::uint64_t total = std::accumulate(weights.begin(), weights.end(), std::uint64_t{0});
  std::uint64_t u = rng.index(total);
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (u < weights[i]) return i;
    u -= weights[i];
  }
  return weights.size() - 1;
}

std::string capitalize(std::string s) {
  if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  return s;
}

std::string provider_name(int i) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "P%04d", i + 1);
  return buf;
}

std::string note_name(const std::string& provider, int j) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "N%s-%03d", provider.c_str() + 1, j + 1);
  return buf;
}

std::string chart_time(int j) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "2150-%02d-%02dT%02d:00:00", 1 + j % 12, 1 + (j * 7) % 28, 6 + j % 12);
  return buf;
}

std::string tenths(std::int64_t v) { return std::to_string(v / 10) + "." + std::to_string(v % 10); }

}  // namespace

void GenConfig::validate() const {
  if (n_providers < 10) throw ConfigError("synth.n_providers must be at least 10");
  if (!(burnout_rate >= 0.0 && burnout_rate <= 1.0)) throw ConfigError("synth.burnout_rate must lie in [0, 1]");
  if (min_notes < 1 || max_notes < min_notes) throw ConfigError("synth note range is invalid");
  if (planted_topics < 1 || planted_vocab < planted_topics) throw ConfigError("synth planted topics invalid");
  if (min_sentences < 1 || max_sentences < min_sentences) throw ConfigError("synth sentence range invalid");
  if (min_words < 1 || max_words < min_words) throw ConfigError("synth word range invalid");
  for (int p : {normal_negative_permille, normal_positive_permille, normal_stress_permille,
                missing_workload_permille}) {
    if (p < 0 || p > 1000) throw ConfigError("synth rates must lie in [0, 1000] per mille");
  }
  if (burnout_min_negative < 0 || burnout_max_negative < burnout_min_negative ||
      burnout_min_stress < 0 || burnout_max_stress < burnout_min_stress || burnout_min_notes < 1 ||
      workload_only_providers < 0) {
    throw ConfigError("synth burnout injection ranges invalid");
  }
}

Eigen::MatrixXd PlantedTopics::distribution() const {
  const auto K = static_cast<Eigen::Index>(weights.size());
  const auto V = static_cast<Eigen::Index>(vocabulary.size());
  Eigen::MatrixXd phi(K, V);
  for (Eigen::Index k = 0; k < K; ++k) {
    for (Eigen::Index w = 0; w < V; ++w) phi(k, w) = weights[static_cast<std::size_t>(k)][static_cast<std::size_t>(w)];
  }
  return phi.array().colwise() / phi.rowwise().sum().array();
}

std::vector<std::string> pseudo_words(int count) {
  static constexpr std::string_view kConsonants = "bfgklmnprtvz";
  static constexpr std::string_view kVowels = "aeiou";
  Rng rng(0x5eedc0de);
  std::set<std::string> seen;
  std::vector<std::string> words;
  while (static_cast<int>(words.size()) < count) {
    std::string w;
    for (int s = 0; s < 3; ++s) {
      w += kConsonants[static_cast<std::size_t>(rng.index(kConsonants.size()))];
      w += kVowels[static_cast<std::size_t>(rng.index(kVowels.size()))];
    }
    if (seen.insert(w).second) words.push_back(w);
  }
  return words;
}

PlantedTopics planted_topics(std::uint64_t seed, int topics, int vocab) {
  PlantedTopics planted;
  planted.vocabulary = pseudo_words(vocab);
  Rng rng(derive_seed(seed, "planted-topics"));
  const int block = vocab / topics;
  for (int k = 0; k < topics; ++k) {
    std::vector<std::uint32_t> row(static_cast<std::size_t>(vocab), 1);
    const int end = k == topics - 1 ? vocab : (k + 1) * block;
    for (int w = k * block; w < end; ++w) {
      row[static_cast<std::size_t>(w)] = 20 + static_cast<std::uint32_t>(rng.index(80));
    }
    planted.weights.push_back(std::move(row));
  }
  return planted;
}

namespace {

std::vector<std::uint64_t> draw_mixture(int topics, Rng& rng) {
  std::vector<std::uint64_t> mix(static_cast<std::size_t>(topics));
  for (auto& m : mix) m = 1 + rng.index(10);
  mix[static_cast<std::size_t>(rng.index(static_cast<std::uint64_t>(topics)))] += 40;
  return mix;
}

std::vector<std::vector<std::uint64_t>> widen(const PlantedTopics& planted) {
  std::vector<std::vector<std::uint64_t>> out;
  for (const auto& row : planted.weights) out.emplace_back(row.begin(), row.end());
  return out;
}

}  // namespace

PlantedCorpus planted_topic_corpus(std::uint64_t seed, int topics, int vocab, int n_docs, int min_len,
                                   int max_len) {
  PlantedCorpus corpus;
  corpus.topics = planted_topics(seed, topics, vocab);
  const auto word_weights = widen(corpus.topics);
  for (int d = 0; d < n_docs; ++d) {
    char id[16];
    std::snprintf(id, sizeof(id), "doc%05d", d);
    Rng rng(derive_seed(seed, id));
    const auto mix = draw_mixture(topics, rng);
    const auto len = rng.between(min_len, max_len);
    topics::Document doc{id, {}};
    for (std::int64_t i = 0; i < len; ++i) {
      const std::size_t k = pick_weighted(mix, rng);
      doc.terms.push_back(static_cast<int>(pick_weighted(word_weights[k], rng)));
    }
    corpus.docs.push_back(std::move(doc));
  }
  return corpus;
}

Corpus generate(const GenConfig& config) {
  config.validate();
  const PlantedTopics planted = planted_topics(config.seed, config.planted_topics, config.planted_vocab);
  const auto word_weights = widen(planted);

  // Burnout providers: a seeded shuffle of provider indices.
  const int n = config.n_providers;
  const int n_burnout = static_cast<int>(std::llround(config.burnout_rate * n));
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  {
    Rng rng(derive_seed(config.seed, "burnout-selection"));
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);
  }
  std::vector<bool> is_burnout(static_cast<std::size_t>(n), false);
  for (int i = 0; i < n_burnout; ++i) is_burnout[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = true;

  Corpus corpus;
  std::ostringstream notes, admissions, labs, procedures, truth;
  admissions << "admit_provider_id,hadm_id,hospital_expire_flag,los_days\n";
  labs << "order_provider_id,itemid\n";
  procedures << "caregiver_id,itemid\n";
  truth << "provider_id,is_burnout\n";

  nlohmann::ordered_json manifest;
  nlohmann::ordered_json provider_rows = nlohmann::ordered_json::array();
  std::uint64_t stress_sum[2] = {0, 0};
  std::uint64_t stress_providers[2] = {0, 0};
  int hadm = 100000;

  for (int i = 0; i < n; ++i) {
    const std::string provider = provider_name(i);
    const bool burnout = is_burnout[static_cast<std::size_t>(i)];
    Rng prng(derive_seed(config.seed, "provider/" + provider));

    // Heavy-tailed note count: min + (max - min) * u^5 in integer arithmetic.
    const std::int64_t u = static_cast<std::int64_t>(prng.index(1000));
    const std::int64_t span = config.max_notes - config.min_notes;
    int note_count = config.min_notes + static_cast<int>(span * u * u * u * u * u / 1000000000000000LL);
    if (burnout) note_count = std::max(note_count, config.burnout_min_notes);

    std::vector<std::uint64_t> specialty_weights;
    for (const auto& s : kSpecialties) {
      specialty_weights.push_back(static_cast<std::uint64_t>(burnout ? s.burnout_weight : s.weight));
    }
    const std::size_t home = pick_weighted(specialty_weights, prng);
    const bool workload_missing =
        !burnout && prng.chance(static_cast<std::uint64_t>(config.missing_workload_permille), 1000);

    std::uint64_t provider_stress = 0;
    nlohmann::ordered_json note_rows = nlohmann::ordered_json::array();
    for (int j = 0; j < note_count; ++j) {
      const std::string note_id = note_name(provider, j);
      Rng rng(derive_seed(config.seed, "note/" + provider, static_cast<std::uint64_t>(j)));

      const std::size_t specialty = rng.chance(9, 10) ? home : static_cast<std::size_t>(rng.index(kSpecialties.size()));
      const char* service = pick(kSpecialties[specialty].services, rng);
      const auto mixture = draw_mixture(config.planted_topics, rng);

      enum class Kind { Topic, Negative, Positive };
      int sentences = static_cast<int>(rng.between(config.min_sentences, config.max_sentences));
      int n_negative = 0;
      int n_positive = 0;
      int n_stress = 0;
      if (burnout) {
        n_negative = static_cast<int>(rng.between(config.burnout_min_negative, config.burnout_max_negative));
        n_stress = static_cast<int>(rng.between(config.burnout_min_stress, config.burnout_max_stress));
      } else {
        n_negative = rng.chance(static_cast<std::uint64_t>(config.normal_negative_permille), 1000) ? 1 : 0;
        n_positive = rng.chance(static_cast<std::uint64_t>(config.normal_positive_permille), 1000) ? 1 : 0;
        n_stress = rng.chance(static_cast<std::uint64_t>(config.normal_stress_permille), 1000) ? 1 : 0;
      }
      sentences = std::max(sentences, n_negative + n_positive + n_stress + 1);

      std::vector<Kind> kinds(static_cast<std::size_t>(sentences), Kind::Topic);
      std::vector<std::size_t> slots(kinds.size());
      std::iota(slots.begin(), slots.end(), std::size_t{0});
      for (std::size_t s = slots.size(); s > 1; --s) std::swap(slots[s - 1], slots[rng.index(s)]);
      std::size_t cursor = 0;
      for (int s = 0; s < n_negative; ++s) kinds[slots[cursor++]] = Kind::Negative;
      for (int s = 0; s < n_positive; ++s) kinds[slots[cursor++]] = Kind::Positive;
      std::set<std::size_t> stress_slots;
      for (int s = 0; s < n_stress; ++s) stress_slots.insert(slots[cursor++]);

      const auto topic_words = [&](std::int64_t count) {
        std::string out;
        for (std::int64_t w = 0; w < count; ++w) {
          const std::size_t k = pick_weighted(mixture, rng);
          if (!out.empty()) out += ' ';
          out += planted.vocabulary[pick_weighted(word_weights[k], rng)];
        }
        return out;
      };

      std::string text = std::string("Service: ") + service + "\n";
      for (std::size_t s = 0; s < kinds.size(); ++s) {
        std::string sentence;
        switch (kinds[s]) {
          case Kind::Topic:
            sentence = capitalize(topic_words(rng.between(config.min_words, config.max_words)));
            if (stress_slots.count(s) > 0) sentence += std::string(" during ") + pick(kStressPhrases, rng);
            break;
          case Kind::Negative: {
            sentence = std::string(pick(kNegativeOpeners, rng)) + " " + pick(kNegativeCues, rng) + ", " +
                       pick(kNegativeCues, rng) + " and " + pick(kNegativeCues, rng) + " after " +
                       topic_words(rng.between(2, 4));
            break;
          }
          case Kind::Positive:
            sentence = std::string(pick(kPositiveOpeners, rng)) + " " + pick(kPositiveCues, rng) + " and " +
                       pick(kPositiveCues, rng) + " with " + topic_words(rng.between(2, 4));
            break;
        }
        text += sentence + (s + 1 < kinds.size() ? ". " : ".");
      }
      if (rng.chance(3, 10)) text += std::string(" ") + pick(kFillers, rng);
      text += "\n";
      provider_stress += static_cast<std::uint64_t>(n_stress);

      nlohmann::ordered_json row;
      row["note_id"] = note_id;
      row["provider_id"] = provider;
      row["text"] = text;
      row["chart_time"] = chart_time(j);
      notes << row.dump() << '\n';
      ++corpus.note_count;

      nlohmann::ordered_json note_manifest;
      note_manifest["note_id"] = note_id;
      note_manifest["topic_weights"] = mixture;
      note_manifest["negative_sentences"] = n_negative;
      note_manifest["stress_mentions"] = n_stress;
      note_rows.push_back(note_manifest);

      if (!workload_missing) {
        Rng wrng(derive_seed(config.seed, "workload/" + provider, static_cast<std::uint64_t>(j)));
        const auto n_labs = burnout ? wrng.between(5, 10) : wrng.between(2, 6);
        for (std::int64_t l = 0; l < n_labs; ++l) labs << provider << ',' << 50000 + wrng.index(900) << '\n';
        const auto n_proc = burnout ? wrng.between(1, 3) : wrng.between(0, 2);
        for (std::int64_t p = 0; p < n_proc; ++p) procedures << provider << ',' << 220000 + wrng.index(300) << '\n';
        const bool expired = wrng.chance(burnout ? 15 : 8, 100);
        const auto los = burnout ? wrng.between(20, 160) : wrng.between(10, 120);
        admissions << provider << ',' << hadm++ << ',' << (expired ? 1 : 0) << ',' << tenths(los) << '\n';
      }
    }

    stress_sum[burnout ? 1 : 0] += provider_stress;
    stress_providers[burnout ? 1 : 0] += 1;
    truth << provider << ',' << (burnout ? 1 : 0) << '\n';
    corpus.providers.push_back(provider);
    corpus.ground_truth[provider] = burnout;

    nlohmann::ordered_json prow;
    prow["provider_id"] = provider;
    prow["is_burnout"] = burnout;
    prow["specialty"] = kSpecialties[home].name;
    prow["note_count"] = note_count;
    prow["workload_missing"] = workload_missing;
    prow["notes"] = note_rows;
    provider_rows.push_back(prow);
  }

  std::vector<std::string> workload_only;
  for (int extra = 0; extra < config.workload_only_providers; ++extra) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "P9%03d", extra + 1);
    Rng rng(derive_seed(config.seed, std::string("workload-only/") + buf));
    const auto n_labs = rng.between(1, 5);
    for (std::int64_t l = 0; l < n_labs; ++l) labs << buf << ',' << 50000 + rng.index(900) << '\n';
    workload_only.emplace_back(buf);
  }

  if (stress_providers[0] > 0 && stress_providers[1] > 0) {
    // Cross-multiplied means: burnout mean must strictly exceed the normal mean.
    if (stress_sum[1] * stress_providers[0] <= stress_sum[0] * stress_providers[1]) {
      throw DataError("synthgen: burnout providers do not carry more stress mentions than normal ones");
    }
  }

  nlohmann::ordered_json cfg;
  cfg["seed"] = config.seed;
  cfg["n_providers"] = config.n_providers;
  cfg["min_notes"] = config.min_notes;
  cfg["max_notes"] = config.max_notes;
  cfg["burnout_rate"] = config.burnout_rate;
  cfg["planted_topics"] = config.planted_topics;
  cfg["planted_vocab"] = config.planted_vocab;
  cfg["normal_negative_permille"] = config.normal_negative_permille;
  cfg["normal_positive_permille"] = config.normal_positive_permille;
  cfg["normal_stress_permille"] = config.normal_stress_permille;
  cfg["burnout_negative_range"] = {config.burnout_min_negative, config.burnout_max_negative};
  cfg["burnout_stress_range"] = {config.burnout_min_stress, config.burnout_max_stress};
  cfg["burnout_min_notes"] = config.burnout_min_notes;
  manifest["format"] = "burnout-synth-manifest-v1";
  manifest["config"] = cfg;
  manifest["planted_vocabulary"] = planted.vocabulary;
  manifest["planted_topic_weights"] = planted.weights;
  manifest["burnout_providers"] = n_burnout;
  manifest["note_count"] = corpus.note_count;
  manifest["workload_only_providers"] = workload_only;
  manifest["providers"] = provider_rows;

  corpus.notes_jsonl = notes.str();
  corpus.admissions_csv = admissions.str();
  corpus.labevents_csv = labs.str();
  corpus.procedureevents_csv = procedures.str();
  corpus.ground_truth_csv = truth.str();
  corpus.manifest_json = manifest.dump(1) + "\n";
  return corpus;
}

void write_corpus(const Corpus& corpus, const std::filesystem::path& dir) {
  write_file(dir / "notes.jsonl", corpus.notes_jsonl);
  write_file(dir / "admissions.csv", corpus.admissions_csv);
  write_file(dir / "labevents.csv", corpus.labevents_csv);
  write_file(dir / "procedureevents.csv", corpus.procedureevents_csv);
  write_file(dir / "ground_truth.csv", corpus.ground_truth_csv);
  write_file(dir / "manifest.json", corpus.manifest_json);
}

}  // namespace burnout::synthgen
