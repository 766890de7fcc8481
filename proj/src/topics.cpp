#include "burnout/topics.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

#include "burnout/text_io.hpp"

namespace burnout::topics {

std::optional<std::size_t> Vocabulary::find(const std::string& term) const {
  const auto it = index.find(term);
  if (it == index.end()) return std::nullopt;
  return it->second;
}

namespace {

std::string bigram(const std::string& a, const std::string& b) { return a + "_" + b; }

template <typename Fn>
void for_each_term(const preprocess::CleanNote& note, Fn&& fn) {
  for (const auto& sentence : note.sentences) {
    const auto& t = sentence.tokens;
    for (std::size_t i = 0; i < t.size(); ++i) {
      fn(t[i]);
      if (i + 1 < t.size()) fn(bigram(t[i], t[i + 1]));
    }
  }
}

}  // namespace

Vocabulary build_vocabulary(const std::vector<preprocess::CleanNote>& notes, std::size_t top_k,
                            std::size_t min_df, Warnings* warnings) {
  if (top_k < 2) throw ConfigError("topics.vocab_top_k must be at least 2");
  if (notes.empty()) throw DataError("cannot build a vocabulary from an empty corpus");

  std::map<std::string, std::pair<std::size_t, std::size_t>> stats;  // term -> (count, df)
  for (const auto& note : notes) {
    std::set<std::string> seen;
    for_each_term(note, [&](const std::string& term) {
      auto& s = stats[term];
      s.first += 1;
      if (seen.insert(term).second) s.second += 1;
    });
  }

  struct Candidate {
    const std::string* term;
    std::size_t df;
    double weight;
  };
  const double n_docs = static_cast<double>(notes.size());
  std::vector<Candidate> candidates;
  for (const auto& [term, s] : stats) {
    if (s.second < min_df) continue;
    const double idf = std::log(n_docs / static_cast<double>(s.second));
    candidates.push_back({&term, s.second, static_cast<double>(s.first) * idf});
  }
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    if (a.weight != b.weight) return a.weight > b.weight;
    return *a.term < *b.term;
  });
  if (candidates.size() < top_k) {
    warn(warnings, "vocabulary: only " + std::to_string(candidates.size()) +
                       " candidate terms for top_k=" + std::to_string(top_k));
  } else {
    candidates.resize(top_k);
  }

  Vocabulary vocab;
  for (const auto& c : candidates) {
    vocab.index.emplace(*c.term, vocab.terms.size());
    vocab.terms.push_back(*c.term);
    vocab.df.push_back(c.df);
    vocab.tfidf_weight.push_back(c.weight);
  }
  return vocab;
}

std::vector<Document> to_documents(const std::vector<preprocess::CleanNote>& notes,
                                   const Vocabulary& vocab) {
  std::vector<Document> docs;
  docs.reserve(notes.size());
  for (const auto& note : notes) {
    Document doc{note.note_id, {}};
    for_each_term(note, [&](const std::string& term) {
      if (const auto idx = vocab.find(term)) doc.terms.push_back(static_cast<int>(*idx));
    });
    docs.push_back(std::move(doc));
  }
  return docs;
}

void LdaParams::validate() const {
  if (topics < 1) throw ConfigError("topics.k must be at least 1");
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ConfigError("topics.alpha must be positive");
  if (!(beta > 0.0) || !std::isfinite(beta)) throw ConfigError("topics.beta must be positive");
  if (iterations < 1) throw ConfigError("topics.iterations must be at least 1");
}

bool LdaState::counts_consistent() const {
  Eigen::MatrixXi dk = Eigen::MatrixXi::Zero(n_dk.rows(), n_dk.cols());
  Eigen::MatrixXi kw = Eigen::MatrixXi::Zero(n_kw.rows(), n_kw.cols());
  for (std::size_t d = 0; d < z.size(); ++d) {
    if (z[d].size() != words[d].size()) return false;
    for (std::size_t i = 0; i < z[d].size(); ++i) {
      const int k = z[d][i];
      if (k < 0 || k >= topics) return false;
      dk(static_cast<Eigen::Index>(d), k) += 1;
      kw(k, words[d][i]) += 1;
    }
  }
  if (dk != n_dk || kw != n_kw) return false;
  if (n_kw.rowwise().sum() != n_k) return false;
  for (std::size_t d = 0; d < z.size(); ++d) {
    if (n_dk.row(static_cast<Eigen::Index>(d)).sum() != static_cast<int>(words[d].size())) return false;
  }
  return (n_dk.array() >= 0).all() && (n_kw.array() >= 0).all();
}

GibbsSampler::GibbsSampler(const std::vector<Document>& docs, std::size_t vocab_size,
                           const LdaParams& params, Warnings* warnings) {
  params.validate();
  if (vocab_size == 0) throw ConfigError("LDA needs a non-empty vocabulary");
  const int K = params.topics;
  const int V = static_cast<int>(vocab_size);
  state_.topics = K;
  state_.alpha = params.alpha;
  state_.beta = params.beta;
  state_.rng_seed = params.seed;

  std::set<std::string> ids;
  for (const auto& doc : docs) {
    if (!ids.insert(doc.id).second) throw DataError("duplicate document id '" + doc.id + "'");
    if (doc.terms.empty()) {
      warn(warnings, "document '" + doc.id + "' is empty after vocabulary filtering, dropped");
      continue;
    }
    for (int w : doc.terms) {
      if (w < 0 || w >= V) throw DataError("document '" + doc.id + "' has an out-of-range term");
    }
    state_.doc_ids.push_back(doc.id);
    state_.words.push_back(doc.terms);
  }

  const auto D = static_cast<Eigen::Index>(state_.words.size());
  state_.n_dk = Eigen::MatrixXi::Zero(D, K);
  state_.n_kw = Eigen::MatrixXi::Zero(K, V);
  state_.n_k = Eigen::VectorXi::Zero(K);
  state_.z.resize(state_.words.size());

  order_.resize(state_.words.size());
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  std::sort(order_.begin(), order_.end(),
            [&](std::size_t a, std::size_t b) { return state_.doc_ids[a] < state_.doc_ids[b]; });

  streams_.reserve(state_.words.size());
  for (const auto& id : state_.doc_ids) streams_.emplace_back(derive_seed(params.seed, id));

  for (std::size_t d : order_) {
    auto& zd = state_.z[d];
    zd.resize(state_.words[d].size());
    for (std::size_t i = 0; i < zd.size(); ++i) {
      const int k = static_cast<int>(streams_[d].index(static_cast<std::uint64_t>(K)));
      zd[i] = k;
      state_.n_dk(static_cast<Eigen::Index>(d), k) += 1;
      state_.n_kw(k, state_.words[d][i]) += 1;
      state_.n_k(k) += 1;
    }
  }
  weights_.resize(static_cast<std::size_t>(K));
}

void GibbsSampler::sweep() {
  const int K = state_.topics;
  const double alpha = state_.alpha;
  const double beta = state_.beta;
  const double vb = static_cast<double>(state_.vocab_size()) * beta;
  auto& n_dk = state_.n_dk;
  auto& n_kw = state_.n_kw;
  auto& n_k = state_.n_k;

  for (std::size_t d : order_) {
    const auto row = static_cast<Eigen::Index>(d);
    const auto& words = state_.words[d];
    auto& zd = state_.z[d];
    Rng& rng = streams_[d];
    for (std::size_t i = 0; i < words.size(); ++i) {
      const int w = words[i];
      const int old = zd[i];
      n_dk(row, old) -= 1;
      n_kw(old, w) -= 1;
      n_k(old) -= 1;

      double total = 0.0;
      for (int k = 0; k < K; ++k) {
        total += (n_dk(row, k) + alpha) * (n_kw(k, w) + beta) / (n_k(k) + vb);
        weights_[static_cast<std::size_t>(k)] = total;
      }
      const double u = rng.uniform() * total;
      int k = 0;
      while (k < K - 1 && u >= weights_[static_cast<std::size_t>(k)]) ++k;

      zd[i] = k;
      n_dk(row, k) += 1;
      n_kw(k, w) += 1;
      n_k(k) += 1;
    }
  }
  ++sweeps_;
}

std::vector<std::vector<std::size_t>> top_terms(const Eigen::MatrixXd& phi, std::size_t m) {
  std::vector<std::vector<std::size_t>> out;
  const auto V = static_cast<std::size_t>(phi.cols());
  for (Eigen::Index k = 0; k < phi.rows(); ++k) {
    std::vector<std::size_t> idx(V);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    const std::size_t keep = std::min(m, V);
    std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(keep), idx.end(),
                      [&](std::size_t a, std::size_t b) {
                        const double pa = phi(k, static_cast<Eigen::Index>(a));
                        const double pb = phi(k, static_cast<Eigen::Index>(b));
                        if (pa != pb) return pa > pb;
                        return a < b;
                      });
    idx.resize(keep);
    out.push_back(std::move(idx));
  }
  return out;
}

std::vector<double> umass_coherence(const std::vector<std::vector<std::size_t>>& ranked_terms,
                                    const std::vector<Document>& docs, std::size_t top_m) {
  if (top_m < 2) throw ConfigError("coherence top_m must be at least 2");
  std::vector<std::set<int>> doc_sets;
  doc_sets.reserve(docs.size());
  for (const auto& d : docs) doc_sets.emplace_back(d.terms.begin(), d.terms.end());
  const auto doc_freq = [&](int w) {
    std::size_t n = 0;
    for (const auto& s : doc_sets) n += s.count(w);
    return n;
  };
  const auto co_freq = [&](int a, int b) {
    std::size_t n = 0;
    for (const auto& s : doc_sets) n += (s.count(a) > 0 && s.count(b) > 0) ? 1 : 0;
    return n;
  };

  std::vector<double> out;
  for (const auto& ranked : ranked_terms) {
    const std::size_t m = std::min(top_m, ranked.size());
    double c = 0.0;
    for (std::size_t j = 1; j < m; ++j) {
      for (std::size_t i = 0; i < j; ++i) {
        const int higher = static_cast<int>(ranked[i]);
        const int lower = static_cast<int>(ranked[j]);
        const std::size_t dh = doc_freq(higher);
        if (dh == 0) throw DataError("coherence: term with zero document frequency");
        c += std::log((static_cast<double>(co_freq(lower, higher)) + 1.0) / static_cast<double>(dh));
      }
    }
    out.push_back(c);
  }
  return out;
}

FitResult gibbs_fit(const std::vector<Document>& docs, std::size_t vocab_size,
                    const LdaParams& params, std::size_t coherence_top_m, Warnings* warnings) {
  GibbsSampler sampler(docs, vocab_size, params, warnings);
  for (int it = 0; it < params.iterations; ++it) sampler.sweep();

  FitResult result;
  result.state = sampler.state();
  auto& model = result.model;
  model.params = params;
  model.phi = estimate_phi(result.state);
  model.theta = estimate_theta(result.state);
  model.doc_ids = result.state.doc_ids;
  model.top_terms = top_terms(model.phi, coherence_top_m);

  std::vector<Document> retained;
  for (std::size_t d = 0; d < result.state.words.size(); ++d) {
    retained.push_back(Document{result.state.doc_ids[d], result.state.words[d]});
  }
  if (coherence_top_m >= 2 && vocab_size >= 2) {
    model.coherence = umass_coherence(model.top_terms, retained, coherence_top_m);
  } else {
    model.coherence.assign(static_cast<std::size_t>(params.topics), 0.0);
  }
  return result;
}

std::vector<std::pair<double, double>> default_grid() {
  std::vector<std::pair<double, double>> grid;
  for (double a : {0.05, 0.1, 0.5, 1.0}) {
    for (double b : {0.005, 0.01, 0.1}) grid.emplace_back(a, b);
  }
  return grid;
}

TuneResult tune_hyperparameters(const std::vector<Document>& docs, std::size_t vocab_size,
                                const LdaParams& base,
                                const std::vector<std::pair<double, double>>& grid,
                                std::size_t coherence_top_m) {
  if (grid.empty()) throw ConfigError("hyperparameter grid is empty");
  std::vector<std::future<double>> jobs;
  for (const auto& [a, b] : grid) {
    LdaParams p = base;
    p.alpha = a;
    p.beta = b;
    p.validate();
    jobs.push_back(std::async(std::launch::async, [&docs, vocab_size, p, coherence_top_m] {
      const auto fit = gibbs_fit(docs, vocab_size, p, coherence_top_m);
      const auto& c = fit.model.coherence;
      return c.empty() ? 0.0 : std::accumulate(c.begin(), c.end(), 0.0) / static_cast<double>(c.size());
    }));
  }
  TuneResult result;
  std::size_t best = 0;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    result.mean_coherence.push_back(jobs[i].get());
    if (result.mean_coherence[i] > result.mean_coherence[best]) best = i;
  }
  result.alpha = grid[best].first;
  result.beta = grid[best].second;
  return result;
}

std::vector<std::pair<std::size_t, double>> top_two(const Eigen::VectorXd& weights) {
  std::vector<std::size_t> idx(static_cast<std::size_t>(weights.size()));
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return weights(static_cast<Eigen::Index>(a)) > weights(static_cast<Eigen::Index>(b));
  });
  std::vector<std::pair<std::size_t, double>> out;
  for (std::size_t i = 0; i < std::min<std::size_t>(2, idx.size()); ++i) {
    out.emplace_back(idx[i], weights(static_cast<Eigen::Index>(idx[i])));
  }
  return out;
}

std::vector<ProviderTopicProfile> provider_topic_profiles(
    const TopicModel& model, const std::map<std::string, std::string>& provider_of,
    const std::vector<std::string>& providers, Warnings* warnings) {
  std::map<std::string, std::vector<std::pair<std::string, Eigen::Index>>> rows;
  for (std::size_t d = 0; d < model.doc_ids.size(); ++d) {
    const auto it = provider_of.find(model.doc_ids[d]);
    if (it == provider_of.end()) throw DataError("document '" + model.doc_ids[d] + "' has no provider");
    rows[it->second].emplace_back(model.doc_ids[d], static_cast<Eigen::Index>(d));
  }
  std::vector<ProviderTopicProfile> out;
  for (const auto& provider : std::set<std::string>(providers.begin(), providers.end())) {
    auto it = rows.find(provider);
    if (it == rows.end()) {
      warn(warnings, "provider '" + provider + "' has no documents in the topic model, skipped");
      continue;
    }
    auto& list = it->second;
    std::sort(list.begin(), list.end());
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(model.theta.cols());
    for (const auto& [id, row] : list) sum += model.theta.row(row).transpose();
    ProviderTopicProfile p;
    p.provider_id = provider;
    p.mean_theta = sum / static_cast<double>(list.size());
    p.top2 = top_two(p.mean_theta);
    out.push_back(std::move(p));
  }
  return out;
}

void write_model(const std::filesystem::path& dir, const TopicModel& model, const Vocabulary& vocab) {
  std::ostringstream v;
  v << "index,term,df,tfidf_weight\n";
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    v << i << ',' << vocab.terms[i] << ',' << vocab.df[i] << ',' << format_double(vocab.tfidf_weight[i])
      << '\n';
  }
  write_file(dir / "vocabulary.csv", v.str());

  std::ostringstream phi;
  phi << "topic";
  for (const auto& t : vocab.terms) phi << ',' << t;
  phi << '\n';
  for (Eigen::Index k = 0; k < model.phi.rows(); ++k) {
    phi << k;
    for (Eigen::Index w = 0; w < model.phi.cols(); ++w) phi << ',' << format_double(model.phi(k, w));
    phi << '\n';
  }
  write_file(dir / "phi.csv", phi.str());

  std::ostringstream theta;
  theta << "doc_id";
  for (Eigen::Index k = 0; k < model.theta.cols(); ++k) theta << ",topic_" << k;
  theta << '\n';
  for (Eigen::Index d = 0; d < model.theta.rows(); ++d) {
    theta << model.doc_ids[static_cast<std::size_t>(d)];
    for (Eigen::Index k = 0; k < model.theta.cols(); ++k) theta << ',' << format_double(model.theta(d, k));
    theta << '\n';
  }
  write_file(dir / "theta.csv", theta.str());

  nlohmann::ordered_json meta;
  meta["format"] = "burnout-lda-text-v1";
  meta["k"] = model.params.topics;
  meta["alpha"] = model.params.alpha;
  meta["beta"] = model.params.beta;
  meta["seed"] = model.params.seed;
  meta["iterations"] = model.params.iterations;
  meta["vocab_size"] = vocab.size();
  meta["documents"] = model.doc_ids.size();
  meta["coherence"] = model.coherence;
  nlohmann::ordered_json terms = nlohmann::ordered_json::array();
  for (const auto& topic : model.top_terms) {
    nlohmann::ordered_json row = nlohmann::ordered_json::array();
    for (std::size_t w : topic) row.push_back(vocab.terms[w]);
    terms.push_back(row);
  }
  meta["top_terms"] = terms;
  write_file(dir / "model_meta.json", meta.dump(2) + "\n");
}

}  // namespace burnout::topics
