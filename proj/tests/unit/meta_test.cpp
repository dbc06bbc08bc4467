#include <gtest/gtest.h>

#include <numeric>
#include <random>
#include <sstream>
#include <thread>

#include <httplib.h>

#include "docmine/error.hpp"
#include "docmine/fixtures.hpp"
#include "docmine/metadata.hpp"
#include "docmine/pdf_writer.hpp"
#include "oracles/vote.hpp"

using namespace docmine;
using namespace docmine::meta;
using nlohmann::json;

namespace {

template <typename F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::Internal;
}

SourceCandidate cand(std::string id, int priority, MetaRecord r) {
  return {std::move(id), priority, std::move(r)};
}

MetaRecord titled(std::string t) {
  MetaRecord r;
  r.title = std::move(t);
  return r;
}

std::string render(const std::vector<std::string>& v) {
  std::string s;
  for (const auto& x : v) s += x + "|";
  return s;
}

}  // namespace

TEST(Heuristic, FixtureOneFrontMatter) {
  const fixtures::Fixture fx = fixtures::generate(0);
  const MetaRecord r = heuristic_meta(pdf::parse_bytes(fx.pdf));
  const json& t = fx.sidecar["meta"];
  EXPECT_EQ(r.title, t["title"].get<std::string>());
  EXPECT_EQ(r.authors, t["authors"].get<std::vector<std::string>>());
  EXPECT_EQ(r.venue, t["venue"].get<std::string>());
  EXPECT_EQ(r.year, 2020);
  EXPECT_EQ(r.doi, "10.1000/jsp.2020.0142");
  EXPECT_EQ(r.abstract, t["abstract"].get<std::string>());
}

TEST(Heuristic, WholeCorpus) {
  for (int i = 1; i < 30; ++i) {
    const fixtures::Fixture fx = fixtures::generate(i);
    SCOPED_TRACE(fx.name);
    const MetaRecord r = heuristic_meta(pdf::parse_bytes(fx.pdf));
    const json& t = fx.sidecar["meta"];
    EXPECT_EQ(r.title, t["title"].get<std::string>());
    EXPECT_EQ(r.authors, t["authors"].get<std::vector<std::string>>());
    EXPECT_EQ(r.year, t["year"].get<int>());
    EXPECT_EQ(r.doi, t["doi"].get<std::string>());
    EXPECT_EQ(r.abstract, t["abstract"].get<std::string>());
  }
}

TEST(Heuristic, SingleRunPage) {
  pdf::PdfWriter w;
  w.add_page().text(72, 100, 11, "Only line here");
  const MetaRecord r = heuristic_meta(pdf::parse_bytes(w.finish()));
  EXPECT_EQ(r.title, "Only line here");
  EXPECT_FALSE(r.authors);
  EXPECT_FALSE(r.venue);
  EXPECT_FALSE(r.year);
  EXPECT_FALSE(r.doi);
  EXPECT_FALSE(r.abstract);
}

TEST(Vote, SpecExamples) {
  EXPECT_EQ(vote_merge({cand("a", 0, titled("A")), cand("b", 1, titled("A")), cand("c", 2, titled("B"))}).title,
            "A");
  MetaRecord y1, y2;
  y1.year = 2018;
  y2.year = 2020;
  EXPECT_EQ(vote_merge({cand("x", 2, y2), cand("y", 1, y1)}).year, 2018);
  EXPECT_EQ(code_of([] { vote_merge({}); }), ErrorCode::NoCandidates);
}

TEST(Vote, CosmeticVariantsShareAVote) {
  const MetaRecord r = vote_merge({cand("a", 0, titled("Zircon  Ages")), cand("b", 1, titled("zircon ages")),
                                   cand("c", 2, titled("ZIRCON AGES ")), cand("d", 3, titled("Other"))});
  EXPECT_EQ(r.title, "Zircon Ages");  // most trusted spelling, tidied
}

TEST(Vote, NoMajorityFallsBackToMostTrusted) {
  // Two of four is not a strict majority.
  const MetaRecord r = vote_merge({cand("a", 3, titled("A")), cand("b", 4, titled("A")),
                                   cand("c", 1, titled("C")), cand("d", 2, titled("D"))});
  EXPECT_EQ(r.title, "C");
}

TEST(Vote, AuthorsVoteAsWholeLists) {
  MetaRecord a, b, c;
  a.authors = {{"A. One", "B. Two"}};
  b.authors = {{"a. one", "b. two"}};
  c.authors = {{"A. One"}};
  EXPECT_EQ(vote_merge({cand("c", 0, c), cand("a", 1, a), cand("b", 2, b)}).authors, a.authors);
}

TEST(Vote, MatchesExhaustiveOracle) {
  std::mt19937_64 rng(99);
  const std::vector<std::string> pool{"Alpha", "alpha", " ALPHA ", "Beta", "beta  ", "Gamma"};
  const std::vector<std::vector<std::string>> lists{{"A. B"}, {"a. b"}, {"A. B", "C. D"}, {"C. D"}};
  for (int trial = 0; trial < 2000; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 5);
    std::vector<int> prio(10);
    std::iota(prio.begin(), prio.end(), 0);
    std::shuffle(prio.begin(), prio.end(), rng);
    std::vector<SourceCandidate> cs;
    std::vector<oracle::Ballot> titles, years, authors;
    for (int i = 0; i < n; ++i) {
      MetaRecord r;
      if (rng() % 4) r.title = pool[rng() % pool.size()];
      if (rng() % 3) r.year = 2018 + static_cast<int>(rng() % 3);
      if (rng() % 3) r.authors = lists[rng() % lists.size()];
      cs.push_back(cand("s" + std::to_string(i), prio[i], r));
      // stored spelling keeps its case and loses surplus whitespace
      auto clean = [](const std::optional<std::string>& s) -> std::optional<std::string> {
        if (!s) return s;
        std::istringstream in(*s);
        std::string word, out;
        while (in >> word) out += (out.empty() ? "" : " ") + word;
        return out;
      };
      titles.push_back({prio[i], clean(r.title)});
      years.push_back({prio[i], r.year ? std::optional(std::to_string(*r.year)) : std::nullopt});
      authors.push_back({prio[i], r.authors ? std::optional(render(*r.authors)) : std::nullopt});
    }
    std::shuffle(cs.begin(), cs.end(), rng);
    const MetaRecord got = vote_merge(cs);
    ASSERT_EQ(got.title, oracle::vote(titles)) << trial;
    ASSERT_EQ(got.year ? std::optional(std::to_string(*got.year)) : std::nullopt, oracle::vote(years));
    ASSERT_EQ(got.authors ? std::optional(render(*got.authors)) : std::nullopt, oracle::vote(authors));
  }
}

TEST(Vote, SingleCandidateIdentityAndIdempotence) {
  MetaRecord r;
  r.title = "T";
  r.authors = {{"X. Y"}};
  r.year = 1999;
  r.doi = "10.1/x";
  const MetaRecord once = vote_merge({cand("a", 5, r)});
  EXPECT_EQ(once, r);
  EXPECT_EQ(vote_merge({cand("self", 0, once)}), once);
}

TEST(Validate, Invariants) {
  EXPECT_EQ(code_of([] { validate(titled(" "), true); }), ErrorCode::ValidationError);
  MetaRecord r = titled("T");
  r.year = 1499;
  EXPECT_EQ(code_of([&] { validate(r, true); }), ErrorCode::ValidationError);
  r.year = 2100;
  validate(r, true);
  r.authors = {{"A", " "}};
  EXPECT_EQ(code_of([&] { validate(r, true); }), ErrorCode::ValidationError);
}

TEST(Payload, StrictParsing) {
  const MetaRecord r = parse_payload(json{{"title", " T "}, {"year", "2001"}, {"authors", {"A"}}});
  EXPECT_EQ(r.title, "T");
  EXPECT_EQ(r.year, 2001);
  for (const json& bad : {json::array(), json{{"title", 3}}, json{{"authors", "A"}},
                          json{{"year", "later"}}, json{{"year", 3000}}})
    EXPECT_EQ(code_of([&] { parse_payload(bad); }), ErrorCode::ValidationError) << bad.dump();
}

TEST(Adapters, HttpAdapterAndDegradation) {
  httplib::Server srv;
  srv.Post("/good", [](const httplib::Request& req, httplib::Response& res) {
    const bool pdf = req.body.rfind("%PDF", 0) == 0;
    res.set_content(json{{"title", pdf ? "Remote title" : "?"}, {"year", 2020}}.dump(), "application/json");
  });
  srv.Post("/bad", [](const httplib::Request&, httplib::Response& res) {
    res.set_content("{not json", "application/json");
  });
  const int port = srv.bind_to_any_port("127.0.0.1");
  std::thread t([&] { srv.listen_after_bind(); });
  srv.wait_until_ready();

  const fixtures::Fixture fx = fixtures::generate(0);
  pdf::DocumentSource src = pdf::make_source("d1", "f.pdf", fx.pdf);
  const auto pages = pdf::parse_document(src);
  const std::string base = "http://127.0.0.1:" + std::to_string(port);
  std::vector<std::shared_ptr<const Adapter>> ads{
      std::make_shared<HttpAdapter>("good", base + "/good", 1),
      std::make_shared<HttpAdapter>("bad", base + "/bad", 2),
      std::make_shared<HttpAdapter>("down", "http://127.0.0.1:1/x", 3, std::chrono::milliseconds(200))};
  const auto cs = extract_meta_candidates(src, pages, ads);
  srv.stop();
  t.join();
  ASSERT_EQ(cs.size(), 2u);
  EXPECT_EQ(cs[0].source_id, kBuiltinSource);
  EXPECT_EQ(cs[0].priority, 0);
  EXPECT_EQ(cs[1].fields.title, "Remote title");
  // Two sources disagree on the title: the built-in one is most trusted.
  EXPECT_EQ(vote_merge(cs).title, fx.sidecar["meta"]["title"].get<std::string>());
}

TEST(MetaJson, RoundTrip) {
  MetaRecord r = titled("T");
  r.edited_by_user = true;
  r.year = 2000;
  const json j = r;
  EXPECT_TRUE(j["doi"].is_null());
  EXPECT_EQ(j.get<MetaRecord>(), r);
}
