#include "burnout/classifier.hpp"

#include <algorithm>
#include <sstream>

#include "burnout/rng.hpp"
#include "burnout/text_io.hpp"

namespace burnout::classifier {

namespace {

void shuffle(std::vector<std::string>& ids, Rng& rng) {
  for (std::size_t i = ids.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.index(i));
    std::swap(ids[i - 1], ids[j]);
  }
}

}  // namespace

SplitPlan stratified_split(const std::map<std::string, bool>& labels, double test_fraction,
                           std::uint64_t seed, Warnings* warnings) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw ConfigError("classifier.test_fraction must lie in (0, 1)");
  }
  SplitPlan plan;
  plan.seed = seed;
  plan.test_fraction = test_fraction;

  std::vector<std::string> classes[2];
  for (const auto& [id, label] : labels) classes[label ? 1 : 0].push_back(id);
  const std::size_t total = labels.size();
  const auto target = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(total)));

  if (classes[0].empty() || classes[1].empty()) {
    warn(warnings, "stratified split: only one class present, using a plain random split");
    std::vector<std::string> ids = classes[0].empty() ? classes[1] : classes[0];
    Rng rng(derive_seed(seed, "split/all"));
    shuffle(ids, rng);
    plan.test_ids.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(target));
    plan.train_ids.assign(ids.begin() + static_cast<std::ptrdiff_t>(target), ids.end());
  } else {
    std::size_t take[2];
    std::size_t lo[2];
    std::size_t hi[2];
    double exact[2];
    for (int c = 0; c < 2; ++c) {
      const std::size_t count = classes[c].size();
      exact[c] = test_fraction * static_cast<double>(count);
      lo[c] = count >= 2 ? 1 : 0;
      hi[c] = count >= 2 ? count - 1 : count;
      take[c] = std::clamp(static_cast<std::size_t>(std::llround(exact[c])), lo[c], hi[c]);
    }
    // Move single units toward the global target, preferring the class whose
    // rounding error points that way the most.
    while (take[0] + take[1] < target) {
      int best = -1;
      for (int c = 0; c < 2; ++c) {
        if (take[c] >= hi[c]) continue;
        if (best < 0 || exact[c] - static_cast<double>(take[c]) > exact[best] - static_cast<double>(take[best])) best = c;
      }
      if (best < 0) break;
      ++take[best];
    }
    while (take[0] + take[1] > target) {
      int best = -1;
      for (int c = 0; c < 2; ++c) {
        if (take[c] <= lo[c]) continue;
        if (best < 0 || exact[c] - static_cast<double>(take[c]) < exact[best] - static_cast<double>(take[best])) best = c;
      }
      if (best < 0) break;
      --take[best];
    }
    for (int c = 0; c < 2; ++c) {
      std::vector<std::string> ids = classes[c];
      Rng rng(derive_seed(seed, c == 1 ? "split/positive" : "split/negative"));
      shuffle(ids, rng);
      plan.test_ids.insert(plan.test_ids.end(), ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(take[c]));
      plan.train_ids.insert(plan.train_ids.end(), ids.begin() + static_cast<std::ptrdiff_t>(take[c]), ids.end());
    }
  }
  std::sort(plan.train_ids.begin(), plan.train_ids.end());
  std::sort(plan.test_ids.begin(), plan.test_ids.end());
  return plan;
}

EvalReport evaluate(const std::vector<bool>& truth, const std::vector<bool>& predicted, double threshold) {
  if (truth.size() != predicted.size()) throw DataError("evaluate: length mismatch");
  EvalReport r;
  r.threshold = threshold;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] && predicted[i]) ++r.tp;
    else if (!truth[i] && predicted[i]) ++r.fp;
    else if (truth[i] && !predicted[i]) ++r.fn;
    else ++r.tn;
  }
  r.precision = r.tp + r.fp > 0 ? static_cast<double>(r.tp) / static_cast<double>(r.tp + r.fp) : 0.0;
  r.recall = r.tp + r.fn > 0 ? static_cast<double>(r.tp) / static_cast<double>(r.tp + r.fn) : 0.0;
  r.f1 = r.precision + r.recall > 0.0 ? 2.0 * r.precision * r.recall / (r.precision + r.recall) : 0.0;
  return r;
}

std::string model_csv(const TrainedClassifier<double>& model) {
  std::ostringstream out;
  out << "feature,mean,std,weight\n";
  for (Eigen::Index j = 0; j < model.weights.size(); ++j) {
    const std::string name = static_cast<std::size_t>(j) < model.feature_names.size()
                                 ? model.feature_names[static_cast<std::size_t>(j)]
                                 : "x" + std::to_string(j);
    out << name << ',' << format_double(model.feature_means(j)) << ','
        << format_double(model.feature_stds(j)) << ',' << format_double(model.weights(j)) << '\n';
  }
  out << "(bias),0,1," << format_double(model.bias) << '\n';
  return out.str();
}

TrainedClassifier<double> parse_model_csv(std::string_view text) {
  const CsvTable table = parse_csv(text);
  if (table.header != std::vector<std::string>{"feature", "mean", "std", "weight"}) {
    throw DataError("model.csv: unexpected header");
  }
  TrainedClassifier<double> model;
  std::vector<double> means, stds, weights;
  bool bias_seen = false;
  for (const auto& [line, row] : table.rows) {
    const auto m = row.size() == 4 ? parse_double(row[1]) : std::nullopt;
    const auto s = row.size() == 4 ? parse_double(row[2]) : std::nullopt;
    const auto w = row.size() == 4 ? parse_double(row[3]) : std::nullopt;
    if (!m || !s || !w) throw DataError("model.csv line " + std::to_string(line) + ": bad row");
    if (row[0] == "(bias)") {
      model.bias = *w;
      bias_seen = true;
      continue;
    }
    model.feature_names.push_back(row[0]);
    means.push_back(*m);
    stds.push_back(*s);
    weights.push_back(*w);
  }
  if (!bias_seen) throw DataError("model.csv: missing bias row");
  const auto n = static_cast<Eigen::Index>(weights.size());
  model.feature_means = Eigen::Map<Eigen::VectorXd>(means.data(), n);
  model.feature_stds = Eigen::Map<Eigen::VectorXd>(stds.data(), n);
  model.weights = Eigen::Map<Eigen::VectorXd>(weights.data(), n);
  model.active.assign(weights.size(), true);
  return model;
}

}  // namespace burnout::classifier
