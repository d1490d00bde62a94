#pragma once

#include <algorithm>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <boost/regex.hpp>

#include "natflow/ast.hpp"
#include "natflow/text.hpp"
#include "natflow/variables.hpp"

namespace natflow::testing {

inline std::filesystem::path data_path(const std::string& name) {
  return std::filesystem::path(NATFLOW_TEST_DATA) / name;
}

// The movie pattern's regex as printed, with Python's `(?P<` spelled the
// way Boost spells named groups. Line breaks of the printed block removed.
inline const std::string kPrintedMovieRegex =
    R"(.*?\bI\b.*?(?:\b(?:watched)\b|\b(?:saw)\b).*?(?<MOVIE>(?:\b(?:avengers)\b|\b(?:star wars)\b)).*?)";

inline const std::string kMoviePattern = "[I {watched, saw} $MOVIE={Avengers, Star Wars}]";
inline const std::string kGenreTemplate = "I watched lots of $GENRE={action, horror, drama} movies {recently, lately}";

struct OracleMatch {
  bool matched = false;
  std::optional<std::string> movie;
};

// Runs the printed regex the way the original system would: case-insensitive,
// against the whole normalized utterance.
inline OracleMatch printed_regex_oracle(const std::string& normalized) {
  static const boost::regex re(kPrintedMovieRegex, boost::regex::perl | boost::regex::icase);
  boost::smatch m;
  OracleMatch out;
  out.matched = boost::regex_match(normalized, m, re);
  if (out.matched && m["MOVIE"].matched) out.movie = m["MOVIE"].str();
  return out;
}

// Strict descendants by plain recursive DFS over an adjacency map.
inline std::set<std::string> dfs_descendants(const std::map<std::string, std::vector<std::string>>& adjacency,
                                             const std::string& start) {
  std::set<std::string> seen;
  std::function<void(const std::string&)> visit = [&](const std::string& node) {
    auto it = adjacency.find(node);
    if (it == adjacency.end()) return;
    for (const auto& child : it->second) {
      if (seen.insert(child).second) visit(child);
    }
  };
  visit(start);
  return seen;
}

// Random ASTs in the canonical shape the parser produces, built so that
// generation output maps back to a unique match: every word and variable
// occurs at most once per tree, referenced variables are pre-bound to
// words that occur nowhere else.
class AstGenerator {
 public:
  struct Options {
    int max_depth = 3;
    bool allow_variables = true;
    bool allow_assignments = true;
    bool allow_functions = false;      // round-trip only; not generable
    bool exotic_literals = false;      // punctuation and escapes; round-trip only
  };

  explicit AstGenerator(std::uint64_t seed, Options options) : rng_(seed), options_(options) {}
  AstGenerator(std::uint64_t seed) : AstGenerator(seed, Options{}) {}

  struct Sample {
    NatexAst ast;
    VariableTable table;
  };

  Sample next() {
    words_ = 0;
    vars_ = 0;
    table_ = VariableTable{};
    NatexAst root = chance(0.35) ? flex(0) : root_rigid();
    return {std::move(root), table_};
  }

 private:
  bool chance(double p) { return std::bernoulli_distribution(p)(rng_); }
  int uniform(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }

  std::string word() {
    // Base-26 counter, prefixed so no word is a regex or NATEX keyword.
    std::string w = "w";
    for (int n = words_++; ; n /= 26) {
      w += static_cast<char>('a' + n % 26);
      if (n < 26) break;
    }
    if (options_.exotic_literals && chance(0.3)) {
      static const char* extras[] = {"'s", "\\{", "\\}", "\\[", "\\$", "\\#", "\\=", "-x", "\\\\", ".x", "é"};
      w += extras[uniform(0, 10)];
    }
    return w;
  }

  std::string unescape(const std::string& w) {
    std::string out;
    for (std::size_t i = 0; i < w.size(); ++i) {
      if (w[i] == '\\' && i + 1 < w.size()) ++i;
      out += w[i];
    }
    return out;
  }

  NatexAst literal(int max_words) {
    std::string text = unescape(word());
    for (int n = uniform(1, max_words); n > 1; --n) text += " " + unescape(word());
    return NatexAst::literal(text);
  }

  std::string var_name() { return "V" + std::to_string(vars_++); }

  NatexAst variable() {
    std::string name = var_name();
    table_.set(name, unescape(word()));
    return NatexAst::variable(name);
  }

  // A single term. `multiword` permits multi-word literals.
  NatexAst term(int depth, bool multiword) {
    const bool leaf = depth >= options_.max_depth;
    const int pick = leaf ? uniform(0, 1) : uniform(0, 5);
    switch (pick) {
      case 1:
        if (options_.allow_variables) return variable();
        return literal(multiword ? 2 : 1);
      case 2:
        return flex(depth + 1);
      case 3:
        return disjunction(depth + 1);
      case 4:
        if (options_.allow_assignments) {
          return NatexAst::assignment(var_name(), term(depth + 1, false));
        }
        return disjunction(depth + 1);
      case 5:
        if (options_.allow_functions) return call(depth + 1);
        return literal(multiword ? 2 : 1);
      default:
        return literal(multiword ? 2 : 1);
    }
  }

  // Rigid group children: no two literals in a row (the parser merges them).
  std::vector<NatexAst> group(int depth, int min_terms, int max_terms) {
    std::vector<NatexAst> out;
    const int n = uniform(min_terms, max_terms);
    for (int i = 0; i < n; ++i) {
      NatexAst t = term(depth, true);
      if (!out.empty() && out.back().kind == NodeKind::Literal && t.kind == NodeKind::Literal) {
        t = disjunction(depth + 1);
      }
      out.push_back(std::move(t));
    }
    return out;
  }

  NatexAst root_rigid() {
    auto children = group(0, 1, 4);
    if (children.size() == 1 && children.front().kind == NodeKind::FlexSequence) {
      children.push_back(NatexAst::disjunction({literal(1), literal(1)}));
    }
    return NatexAst::rigid(std::move(children));
  }

  NatexAst flex(int depth) {
    std::vector<NatexAst> children;
    for (int n = uniform(1, 3); n > 0; --n) children.push_back(term(depth, false));
    return NatexAst::flex(std::move(children));
  }

  NatexAst alternative(int depth) {
    if (depth < options_.max_depth && chance(0.25)) {
      auto children = group(depth, 2, 3);
      if (children.size() >= 2) return NatexAst::rigid(std::move(children));
      return std::move(children.front());
    }
    return term(depth, true);
  }

  NatexAst disjunction(int depth) {
    std::vector<NatexAst> alternatives;
    for (int n = uniform(1, 3); n > 0; --n) alternatives.push_back(alternative(depth));
    return NatexAst::disjunction(std::move(alternatives));
  }

  NatexAst call(int depth) {
    std::vector<NatexAst> args;
    for (int n = uniform(0, 2); n > 0; --n) {
      if (chance(0.3)) {
        args.push_back(NatexAst::comparison(chance(0.5) ? "==" : "!=", NatexAst::variable(var_name()),
                                            chance(0.5) ? NatexAst::literal("None") : literal(1)));
      } else {
        args.push_back(term(depth, true));
      }
    }
    return NatexAst::call(chance(0.5) ? "IF" : "F" + std::to_string(uniform(0, 9)), std::move(args));
  }

  std::mt19937_64 rng_;
  Options options_;
  int words_ = 0;
  int vars_ = 0;
  VariableTable table_;
};

}  // namespace natflow::testing
