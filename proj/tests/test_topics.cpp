#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "burnout/errors.hpp"
#include "burnout/ingestion.hpp"
#include "burnout/preprocess.hpp"
#include "burnout/rng.hpp"
#include "burnout/synthgen.hpp"
#include "burnout/text_io.hpp"
#include "burnout/topics.hpp"
#include "test_util.hpp"

using namespace burnout;
using namespace burnout::topics;

namespace {

preprocess::CleanNote note_of(const std::string& id, std::vector<std::vector<std::string>> sentences) {
  preprocess::CleanNote n;
  n.note_id = id;
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    n.all_tokens.insert(n.all_tokens.end(), sentences[i].begin(), sentences[i].end());
    n.sentences.push_back({i, std::move(sentences[i]), {}});
  }
  return n;
}

std::vector<Document> random_corpus(Rng& rng, std::size_t n_docs, int vocab, std::size_t max_len) {
  std::vector<Document> docs;
  for (std::size_t d = 0; d < n_docs; ++d) {
    Document doc{"d" + std::to_string(d), {}};
    const auto len = 1 + rng.index(max_len);
    for (std::uint64_t i = 0; i < len; ++i) doc.terms.push_back(static_cast<int>(rng.index(vocab)));
    docs.push_back(std::move(doc));
  }
  return docs;
}

// Recounts n_dk, n_kw and n_k from z independently of the sampler.
void expect_counts_match_assignments(const LdaState& s) {
  Eigen::MatrixXi dk = Eigen::MatrixXi::Zero(s.n_dk.rows(), s.n_dk.cols());
  Eigen::MatrixXi kw = Eigen::MatrixXi::Zero(s.n_kw.rows(), s.n_kw.cols());
  for (std::size_t d = 0; d < s.z.size(); ++d) {
    for (std::size_t i = 0; i < s.z[d].size(); ++i) {
      ++dk(static_cast<Eigen::Index>(d), s.z[d][i]);
      ++kw(s.z[d][i], s.words[d][i]);
    }
    EXPECT_EQ(s.n_dk.row(static_cast<Eigen::Index>(d)).sum(), static_cast<int>(s.words[d].size()));
  }
  EXPECT_EQ(dk, s.n_dk);
  EXPECT_EQ(kw, s.n_kw);
  EXPECT_EQ(Eigen::VectorXi(s.n_kw.rowwise().sum()), s.n_k);
  EXPECT_GE(s.n_dk.minCoeff(), 0);
  EXPECT_GE(s.n_kw.minCoeff(), 0);
}

void expect_stochastic_rows(const Eigen::MatrixXd& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    EXPECT_NEAR(m.row(r).sum(), 1.0, 1e-9);
    EXPECT_GT(m.row(r).minCoeff(), 0.0);
  }
}

}  // namespace

TEST(Vocabulary, TfIdfWeights) {
  const std::vector<preprocess::CleanNote> notes = {note_of("a", {{"alpha", "alpha", "alpha", "beta"}}),
                                                    note_of("b", {{"beta", "gamma"}})};
  Warnings w;
  const auto v = build_vocabulary(notes, 100, 1, &w);
  EXPECT_NEAR(v.tfidf_weight[*v.find("alpha")], 3.0 * std::log(2.0), 1e-12);
  EXPECT_NEAR(v.tfidf_weight[*v.find("alpha")], 2.079, 5e-4);
  EXPECT_EQ(v.terms.front(), "alpha");
  // Present in every document: weight 0, ranked last.
  EXPECT_EQ(v.terms.back(), "beta");
  EXPECT_EQ(v.tfidf_weight.back(), 0.0);
  EXPECT_EQ(v.df[*v.find("beta")], 2u);
  // Bigrams stay inside documents and are joined with '_'.
  EXPECT_TRUE(v.find("alpha_alpha").has_value());
  EXPECT_TRUE(v.find("beta_gamma").has_value());
  EXPECT_FALSE(v.find("beta_beta").has_value());
  // Equal weights ordered lexicographically.
  const auto pos = [&](const char* t) { return *v.find(t); };
  EXPECT_LT(pos("alpha_beta"), pos("beta_gamma"));
  EXPECT_LT(pos("beta_gamma"), pos("gamma"));
  EXPECT_EQ(w.size(), 1u);  // fewer than top_k candidates
}

TEST(Vocabulary, BigramsDoNotCrossSentences) {
  const auto v = build_vocabulary({note_of("a", {{"x"}, {"y"}}), note_of("b", {{"z"}})}, 10, 1);
  EXPECT_FALSE(v.find("x_y").has_value());
}

TEST(Vocabulary, MinDfFilters) {
  const auto v = build_vocabulary({note_of("a", {{"x", "y"}}), note_of("b", {{"x"}}), note_of("c", {{"z"}})}, 10, 2);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v.terms[0], "x");
}

TEST(Vocabulary, TopTwentyOnSyntheticCorpus) {
  synthgen::GenConfig cfg;
  cfg.n_providers = 30;
  const auto corpus = synthgen::generate(cfg);
  const auto pp = preprocess::PreprocessConfig::load(burnout::testing::data_dir());
  std::vector<preprocess::CleanNote> notes;
  for (const auto& raw : ingestion::parse_notes(corpus.notes_jsonl).notes) {
    notes.push_back(preprocess::clean_note(raw.note_id, raw.text, pp));
  }
  Warnings w;
  const auto v = build_vocabulary(notes, 20, 5, &w);
  EXPECT_EQ(v.size(), 20u);
  EXPECT_TRUE(w.empty());
  for (std::size_t i = 1; i < v.size(); ++i) EXPECT_GE(v.tfidf_weight[i - 1], v.tfidf_weight[i]);
  for (auto df : v.df) EXPECT_GE(df, 5u);
}

TEST(Vocabulary, RejectsDegenerateInput) {
  EXPECT_THROW(build_vocabulary({note_of("a", {{"x"}})}, 1, 1), ConfigError);
  EXPECT_THROW(build_vocabulary({}, 10, 1), DataError);
}

TEST(LdaParams, Validation) {
  EXPECT_THROW((LdaParams{0, 0.1, 0.01, 10, 1}.validate()), ConfigError);
  EXPECT_THROW((LdaParams{2, 0.0, 0.01, 10, 1}.validate()), ConfigError);
  EXPECT_THROW((LdaParams{2, 0.1, -1.0, 10, 1}.validate()), ConfigError);
  EXPECT_THROW((LdaParams{2, 0.1, 0.01, 0, 1}.validate()), ConfigError);
  EXPECT_NO_THROW((LdaParams{2, 0.1, 0.01, 1, 1}.validate()));
}

TEST(Gibbs, SingleTopic) {
  Rng rng(1);
  const auto docs = random_corpus(rng, 20, 7, 15);
  const auto fit = gibbs_fit(docs, 7, LdaParams{1, 0.1, 0.01, 5, 3});
  for (Eigen::Index d = 0; d < fit.model.theta.rows(); ++d) EXPECT_DOUBLE_EQ(fit.model.theta(d, 0), 1.0);
  std::vector<double> counts(7, 0.0);
  double total = 0.0;
  for (const auto& d : docs) {
    for (int w : d.terms) counts[static_cast<std::size_t>(w)] += 1.0;
    total += static_cast<double>(d.terms.size());
  }
  for (int w = 0; w < 7; ++w) {
    EXPECT_NEAR(fit.model.phi(0, w), (counts[static_cast<std::size_t>(w)] + 0.01) / (total + 7 * 0.01), 1e-12);
  }
}

TEST(Gibbs, CountsConservedEverySweep) {
  Rng rng(77);
  for (int trial = 0; trial < 5; ++trial) {
    const int K = 2 + static_cast<int>(rng.index(5));
    const int V = 3 + static_cast<int>(rng.index(30));
    const auto docs = random_corpus(rng, 5 + rng.index(20), V, 40);
    GibbsSampler sampler(docs, static_cast<std::size_t>(V), LdaParams{K, 0.1, 0.05, 1, rng.next()});
    expect_counts_match_assignments(sampler.state());
    for (int sweep = 1; sweep <= 30; ++sweep) {
      sampler.sweep();
      ASSERT_TRUE(sampler.state().counts_consistent());
      expect_counts_match_assignments(sampler.state());
      expect_stochastic_rows(estimate_phi(sampler.state()));
      expect_stochastic_rows(estimate_theta(sampler.state()));
    }
  }
}

TEST(Gibbs, CountsAfterSweepsOneTenThousand) {
  Rng rng(5);
  const auto docs = random_corpus(rng, 12, 10, 20);
  GibbsSampler sampler(docs, 10, LdaParams{3, 0.1, 0.01, 1000, 9});
  for (int sweep = 1; sweep <= 1000; ++sweep) {
    sampler.sweep();
    if (sweep == 1 || sweep == 10 || sweep == 1000) expect_counts_match_assignments(sampler.state());
  }
  EXPECT_EQ(sampler.sweeps_done(), 1000);
}

TEST(Gibbs, FloatEstimatesAgreeWithDouble) {
  Rng rng(6);
  const auto docs = random_corpus(rng, 8, 6, 12);
  const auto fit = gibbs_fit(docs, 6, LdaParams{2, 0.5, 0.1, 20, 4});
  const Eigen::MatrixXf phi = estimate_phi<float>(fit.state);
  EXPECT_LT((phi.cast<double>() - fit.model.phi).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Gibbs, SeedDeterminism) {
  Rng rng(8);
  const auto docs = random_corpus(rng, 15, 12, 30);
  const LdaParams p{4, 0.1, 0.01, 50, 42};
  const auto a = gibbs_fit(docs, 12, p);
  const auto b = gibbs_fit(docs, 12, p);
  EXPECT_EQ(a.state.z, b.state.z);
  EXPECT_TRUE((a.model.phi.array() == b.model.phi.array()).all());
  EXPECT_TRUE((a.model.theta.array() == b.model.theta.array()).all());
  const auto c = gibbs_fit(docs, 12, LdaParams{4, 0.1, 0.01, 50, 43});
  EXPECT_NE(a.state.z, c.state.z);
}

TEST(Gibbs, ExchangeableDocumentOrder) {
  Rng rng(9);
  auto docs = random_corpus(rng, 25, 15, 30);
  const LdaParams p{3, 0.1, 0.01, 40, 11};
  const auto a = gibbs_fit(docs, 15, p);
  std::reverse(docs.begin(), docs.end());
  std::swap(docs[3], docs[17]);
  const auto b = gibbs_fit(docs, 15, p);
  std::map<std::string, Eigen::RowVectorXd> rows_a, rows_b;
  for (std::size_t d = 0; d < a.model.doc_ids.size(); ++d) {
    rows_a[a.model.doc_ids[d]] = a.model.theta.row(static_cast<Eigen::Index>(d));
    rows_b[b.model.doc_ids[d]] = b.model.theta.row(static_cast<Eigen::Index>(d));
  }
  ASSERT_EQ(rows_a.size(), rows_b.size());
  for (const auto& [id, row] : rows_a) EXPECT_TRUE((row.array() == rows_b.at(id).array()).all()) << id;
}

TEST(Gibbs, EmptyDocumentsDroppedWithWarning) {
  std::vector<Document> docs = {{"a", {0, 1}}, {"b", {}}, {"c", {1}}};
  Warnings w;
  const auto fit = gibbs_fit(docs, 2, LdaParams{2, 0.1, 0.01, 3, 1}, 2, &w);
  EXPECT_EQ(fit.model.doc_ids, (std::vector<std::string>{"a", "c"}));
  EXPECT_EQ(w.size(), 1u);
}

TEST(Gibbs, DuplicateDocumentIdsRejected) {
  std::vector<Document> docs = {{"a", {0}}, {"a", {1}}};
  EXPECT_THROW(gibbs_fit(docs, 2, LdaParams{2, 0.1, 0.01, 3, 1}), DataError);
}

TEST(Coherence, AlwaysCoOccurring) {
  std::vector<Document> docs;
  for (int d = 0; d < 10; ++d) {
    Document doc{"d" + std::to_string(d), {}};
    if (d < 5) doc.terms = {0, 1};
    else doc.terms = {2};
    docs.push_back(doc);
  }
  const auto c = umass_coherence({{0, 1}}, docs, 2);
  EXPECT_NEAR(c[0], std::log(6.0 / 5.0), 1e-12);
  EXPECT_NEAR(c[0], 0.182, 5e-4);
}

TEST(Coherence, NeverCoOccurring) {
  std::vector<Document> docs;
  for (int d = 0; d < 8; ++d) docs.push_back({"d" + std::to_string(d), {d < 4 ? 0 : 1}});
  const auto c = umass_coherence({{0, 1}}, docs, 2);
  EXPECT_NEAR(c[0], std::log(1.0 / 4.0), 1e-12);
  EXPECT_NEAR(c[0], -1.386, 5e-4);
}

TEST(Coherence, PairCountAndRankDirection) {
  // term 0 in 2 docs, term 1 in 4 docs, together in 2; ranked [1, 0]:
  // ln((D(0,1)+1)/D(1)) = ln(3/4).
  std::vector<Document> docs = {{"a", {0, 1}}, {"b", {0, 1}}, {"c", {1}}, {"d", {1}}, {"e", {2}}};
  EXPECT_NEAR(umass_coherence({{1, 0}}, docs, 2)[0], std::log(3.0 / 4.0), 1e-12);
  EXPECT_NEAR(umass_coherence({{0, 1}}, docs, 2)[0], std::log(3.0 / 2.0), 1e-12);
  // Three terms: three pairs.
  const double three = umass_coherence({{1, 0, 2}}, docs, 3)[0];
  EXPECT_NEAR(three, std::log(3.0 / 4.0) + std::log(1.0 / 4.0) + std::log(1.0 / 2.0), 1e-12);
  EXPECT_THROW(umass_coherence({{0, 1}}, docs, 1), ConfigError);
}

TEST(Tuning, GridBehaviour) {
  const auto planted = synthgen::planted_topic_corpus(42, 3, 30, 60, 30, 50);
  const LdaParams base{3, 0.1, 0.01, 30, 42};
  const auto single = tune_hyperparameters(planted.docs, 30, base, {{0.5, 0.1}});
  EXPECT_EQ(single.alpha, 0.5);
  EXPECT_EQ(single.beta, 0.1);

  const std::vector<std::pair<double, double>> grid = {{0.1, 0.01}, {1.0, 0.1}};
  const auto a = tune_hyperparameters(planted.docs, 30, base, grid);
  const auto b = tune_hyperparameters(planted.docs, 30, base, grid);
  EXPECT_EQ(a.mean_coherence, b.mean_coherence);
  const std::size_t best =
      a.mean_coherence[1] > a.mean_coherence[0] ? 1 : 0;  // ties go to the earlier grid point
  EXPECT_EQ(a.alpha, grid[best].first);
  EXPECT_EQ(a.beta, grid[best].second);
  for (std::size_t g = 0; g < grid.size(); ++g) {
    LdaParams p = base;
    p.alpha = grid[g].first;
    p.beta = grid[g].second;
    const auto fit = gibbs_fit(planted.docs, 30, p);
    double mean = 0.0;
    for (double c : fit.model.coherence) mean += c;
    EXPECT_DOUBLE_EQ(a.mean_coherence[g], mean / 3.0);
  }

  const auto grid12 = default_grid();
  ASSERT_EQ(grid12.size(), 12u);
  EXPECT_EQ(grid12.front(), (std::pair<double, double>{0.05, 0.005}));
  EXPECT_EQ(grid12.back(), (std::pair<double, double>{1.0, 0.1}));
}

TEST(ProviderProfiles, TopTwoWithTies) {
  Eigen::VectorXd w(5);
  w << 0.7, 0.1, 0.1, 0.05, 0.05;
  const auto top = top_two(w);
  ASSERT_EQ(top.size(), 2u);
  EXPECT_EQ(top[0], (std::pair<std::size_t, double>{0, 0.7}));
  EXPECT_EQ(top[1], (std::pair<std::size_t, double>{1, 0.1}));
}

TEST(ProviderProfiles, MeanOfDocumentRows) {
  TopicModel model;
  model.theta = Eigen::MatrixXd::Zero(3, 5);
  model.theta(0, 0) = 1.0;
  model.theta(1, 1) = 1.0;
  model.theta(2, 2) = 1.0;
  model.doc_ids = {"n1", "n2", "n3"};
  Warnings w;
  const auto profiles =
      provider_topic_profiles(model, {{"n1", "A"}, {"n2", "A"}, {"n3", "B"}, {"n4", "C"}}, {"A", "B", "C"}, &w);
  ASSERT_EQ(profiles.size(), 2u);
  EXPECT_EQ(profiles[0].provider_id, "A");
  Eigen::VectorXd expected(5);
  expected << 0.5, 0.5, 0, 0, 0;
  EXPECT_TRUE(profiles[0].mean_theta.isApprox(expected));
  EXPECT_EQ(profiles[0].top2[0].first, 0u);
  EXPECT_EQ(profiles[0].top2[1].first, 1u);
  EXPECT_EQ(w.size(), 1u);  // provider C has no retained documents
}

TEST(ProviderProfiles, MeanRowsSumToOne) {
  Rng rng(12);
  const auto docs = random_corpus(rng, 40, 20, 25);
  const auto fit = gibbs_fit(docs, 20, LdaParams{5, 0.1, 0.01, 20, 1});
  std::map<std::string, std::string> provider_of;
  std::set<std::string> providers;
  for (const auto& d : docs) {
    provider_of[d.id] = "P" + std::to_string(rng.index(7));
    providers.insert(provider_of[d.id]);
  }
  const auto profiles =
      provider_topic_profiles(fit.model, provider_of, {providers.begin(), providers.end()});
  for (const auto& p : profiles) {
    EXPECT_NEAR(p.mean_theta.sum(), 1.0, 1e-6);
    EXPECT_GE(p.top2[0].second, p.top2[1].second);
  }
}

TEST(ModelDump, WritesTextArtifacts) {
  const auto dir = burnout::testing::scratch_dir("model_dump");
  const std::vector<preprocess::CleanNote> notes = {note_of("a", {{"x", "y", "x"}}), note_of("b", {{"y", "z"}})};
  const auto vocab = build_vocabulary(notes, 10, 1);
  const auto docs = to_documents(notes, vocab);
  const auto fit = gibbs_fit(docs, vocab.size(), LdaParams{2, 0.1, 0.01, 5, 3}, 2);
  write_model(dir, fit.model, vocab);
  for (const char* f : {"vocabulary.csv", "phi.csv", "theta.csv", "model_meta.json"}) {
    EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
  }
  const auto phi = parse_csv(read_file(dir / "phi.csv"));
  EXPECT_EQ(phi.rows.size(), 2u);
  EXPECT_EQ(phi.header.size(), vocab.size() + 1);
  EXPECT_NE(read_file(dir / "model_meta.json").find("\"k\": 2"), std::string::npos);
}
