#include <gtest/gtest.h>

#include "natflow/knowledge.hpp"
#include "support.hpp"

using namespace natflow;

namespace {
const char* kFiveNodes = R"js({"ontology": {"entertainment": ["movie", "tv"], "movie": ["avengers", "star wars"]}})js";
}

TEST(Ontology, Loads) {
  const Ontology o = load_ontology(kFiveNodes);
  EXPECT_EQ(o.size(), 5u);
  EXPECT_EQ(load_ontology(R"js({"ontology": {}})js").size(), 0u);
}

TEST(Ontology, Queries) {
  const Ontology o = load_ontology(kFiveNodes);
  EXPECT_EQ(ont_query(o, "movie"), (std::set<std::string>{"avengers", "star wars"}));
  EXPECT_EQ(ont_query(o, "entertainment"), (std::set<std::string>{"movie", "tv", "avengers", "star wars"}));
  std::vector<Diagnostic> warnings;
  EXPECT_TRUE(ont_query(o, "soup", &warnings).empty());
  ASSERT_EQ(warnings.size(), 1u);
  EXPECT_EQ(warnings[0].severity, Severity::Warning);
  EXPECT_TRUE(ont_query(o, "tv").empty());
}

TEST(Ontology, RejectsCycles) {
  for (const char* doc : {R"js({"ontology": {"a": ["b"], "b": ["a"]}})js", R"js({"ontology": {"a": ["a"]}})js",
                          R"js({"ontology": {"x": ["a"], "a": ["b"], "b": ["c"], "c": ["a"]}})js"}) {
    try {
      load_ontology(doc);
      FAIL() << doc;
    } catch (const FlowError& e) {
      EXPECT_EQ(e.kind(), FlowError::Kind::CycleDetected);
      EXPECT_EQ(e.path().rfind("/ontology/", 0), 0u);
    }
  }
}

TEST(Ontology, RejectsBadSchema) {
  for (const char* doc : {"[]", "{}", R"js({"ontology": {"a": "b"}})js", R"js({"ontology": {"a": [1]}})js", "{"}) {
    try {
      load_ontology(doc);
      FAIL() << doc;
    } catch (const FlowError& e) {
      EXPECT_EQ(e.kind(), FlowError::Kind::Schema) << doc;
    }
  }
}

TEST(Ontology, DiamondsAreNotCycles) {
  const Ontology o = load_ontology(R"js({"ontology": {"a": ["b", "c"], "b": ["d"], "c": ["d"]}})js");
  EXPECT_EQ(ont_query(o, "a"), (std::set<std::string>{"b", "c", "d"}));
}

TEST(Ontology, AgreesWithDfsOracle) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = std::uniform_int_distribution<int>(1, 40)(rng);
    std::map<std::string, std::vector<std::string>> adjacency;
    Ontology::Edges edges;
    for (int i = 0; i < n; ++i) {
      std::vector<std::string> kids;
      for (int j = i + 1; j < n; ++j) {
        if (std::bernoulli_distribution(0.1)(rng)) kids.push_back("n" + std::to_string(j));
      }
      adjacency["n" + std::to_string(i)] = kids;
      edges.emplace_back("n" + std::to_string(i), kids);
    }
    const Ontology o = Ontology::from_edges(edges);
    for (int i = 0; i < n; ++i) {
      const std::string label = "n" + std::to_string(i);
      EXPECT_EQ(o.descendants(label), natflow::testing::dfs_descendants(adjacency, label));
    }
  }
}

TEST(Registry, BuiltinsAlwaysPresent) {
  FunctionRegistry r;
  for (const char* name : {"ONT", "ASSIGN", "IF"}) {
    EXPECT_TRUE(r.contains(name));
    EXPECT_TRUE(r.names().contains(name));
    EXPECT_TRUE(FunctionRegistry::is_builtin(name));
  }
  EXPECT_THROW(r.add("IF", ResultKind::Bool, nullptr), std::invalid_argument);
  r.add("MDB", ResultKind::StringSet, word_list_function({"x"}));
  EXPECT_THROW(r.add("MDB", ResultKind::StringSet, word_list_function({"y"})), std::invalid_argument);
  EXPECT_TRUE(r.contains("MDB"));
  EXPECT_EQ(r.find("MDB")->declared, ResultKind::StringSet);
}

TEST(FunctionResult, StringSetsDropEmpty) {
  const FunctionResult r = FunctionResult::strings({"", "a"});
  EXPECT_EQ(r.kind(), ResultKind::StringSet);
  EXPECT_EQ(r.as_strings(), (std::set<std::string>{"a"}));
  EXPECT_EQ(FunctionResult::text("x").kind(), ResultKind::Text);
  EXPECT_EQ(FunctionResult::boolean(false).kind(), ResultKind::Bool);
}

TEST(WordList, LoadsJsonArray) {
  EXPECT_EQ(load_word_list(natflow::testing::data_path("mdb.json")),
            (FunctionResult::StringSet{"avengers", "star wars", "parasite", "inception"}));
  EXPECT_THROW(load_word_list(natflow::testing::data_path("missing.json")), FlowError);
}
