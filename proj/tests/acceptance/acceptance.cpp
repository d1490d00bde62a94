// One PASS/FAIL line per acceptance criterion. Exit status is the number of
// failures. All tolerances below are exact agreement.

#include <httplib.h>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <numeric>
#include <iostream>
#include <sstream>
#include <thread>

#include <unistd.h>

#include "natflow/compile.hpp"
#include "natflow/composite.hpp"
#include "natflow/document.hpp"
#include "natflow/rules.hpp"
#include "natflow/server.hpp"
#include "natflow/validate.hpp"
#include "support.hpp"

using namespace natflow;
using namespace natflow::testing;
using nlohmann::json;

namespace {

constexpr int kRegexFuzzStrings = 1000;
constexpr int kLargeSetSize = 10000;
constexpr int kLargeSetFuzz = 200;
constexpr int kGenreDraws = 1000;
constexpr std::size_t kGenreProductions = 6;
constexpr int kConsistencyAsts = 500;
constexpr int kRecencySeeds = 50;
constexpr int kOntologyDags = 100;
constexpr int kOntologyMaxNodes = 50;
constexpr int kParallelSessions = 8;
constexpr int kTurnsPerSession = 20;
constexpr double kRulePriority = 0.5;
constexpr double kRaisedPriority = 2.0;

struct Check {
  bool ok = true;
  std::ostringstream detail;

  void expect(bool condition, const std::string& what) {
    if (!condition && ok) detail << what;
    ok = ok && condition;
  }
};

struct Env {
  FunctionRegistry registry;
  VariableTable table;
  std::vector<Diagnostic> warnings;

  EvalEnv env() { return EvalEnv{&registry, VariableScope{&table, ""}, &warnings}; }
};

std::string pick(std::mt19937_64& rng, const std::vector<std::string>& v) {
  return v[std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(rng)];
}

std::string random_utterance(std::mt19937_64& rng, const std::vector<std::string>& vocab, int max_words) {
  std::string u;
  for (int n = std::uniform_int_distribution<int>(0, max_words)(rng); n > 0; --n) {
    if (!u.empty()) u += std::bernoulli_distribution(0.2)(rng) ? ", " : " ";
    u += pick(rng, vocab);
  }
  return u;
}

void regex_fidelity(Check& c) {
  Env e;
  const NatexAst ast = parse(kMoviePattern);
  const boost::regex reference(to_reference_regex(ast, {}), boost::regex::perl);
  std::vector<std::string> corpus{"I watched avengers", "I saw Star Wars"};
  const std::vector<std::string> vocab{"I",      "i",     "watched", "saw",  "Avengers", "avengers", "star",
                                       "wars",   "Star",  "Wars",    "star wars", "the", "movie", "it",
                                       "Iwatched", "saws", "avengersx", "seen", "we", "you"};
  std::mt19937_64 rng(2024);
  for (int i = 0; i < kRegexFuzzStrings; ++i) corpus.push_back(random_utterance(rng, vocab, 7));

  int agree = 0;
  for (const auto& raw : corpus) {
    const std::string u = normalize(raw);
    const OracleMatch oracle = printed_regex_oracle(u);
    const MatchResult ours = match(ast, e.env(), raw);
    boost::smatch m;
    const bool ref = boost::regex_match(u, m, reference);
    const std::optional<std::string> ref_movie =
        ref && m["MOVIE"].matched ? std::optional(m["MOVIE"].str()) : std::nullopt;
    const std::optional<std::string> our_movie =
        ours.bindings.contains("MOVIE") ? std::optional(ours.bindings.at("MOVIE")) : std::nullopt;
    if (ref == oracle.matched && ref_movie == oracle.movie && ours.matched == oracle.matched &&
        our_movie == oracle.movie) {
      ++agree;
    } else {
      c.expect(false, "disagreement on '" + raw + "'; ");
    }
  }
  c.detail << agree << "/" << corpus.size() << " agree";
}

void movie_captures(Check& c) {
  Env e;
  const NatexAst ast = parse(kMoviePattern);
  const MatchResult a = match(ast, e.env(), "I watched avengers");
  const MatchResult b = match(ast, e.env(), "I saw Star Wars");
  c.expect(a.matched && a.bindings == Bindings{{"MOVIE", "avengers"}}, "avengers capture; ");
  c.expect(b.matched && b.bindings == Bindings{{"MOVIE", "star wars"}}, "star wars capture; ");
  c.detail << "MOVIE=" << (a.bindings.contains("MOVIE") ? a.bindings.at("MOVIE") : "-") << ", MOVIE="
           << (b.bindings.contains("MOVIE") ? b.bindings.at("MOVIE") : "-");
}

void dynamic_compilation(Check& c) {
  Env e;
  FunctionResult::StringSet words;
  for (int i = 0; i < kLargeSetSize; ++i) words.insert("item" + std::to_string(i));
  e.registry.add("BIG", ResultKind::StringSet, word_list_function(words));
  const NatexAst ast = parse("[i {like, love} $X=#BIG()]");

  const CompiledMatcher one = compile_matcher(ast, e.env(), "i really like item4242 a lot");
  const std::size_t compiled = one.calls.empty() ? 0 : one.calls[0].compiled_elements.size();
  c.expect(compiled == 1, "compiled " + std::to_string(compiled) + " elements; ");

  const std::vector<std::string> vocab{"i",        "like",     "love",    "item7",  "item42", "item9999",
                                       "item10000", "item-1",  "items",   "hate",   "item",   "item4242"};
  std::mt19937_64 rng(77);
  int agree = 0;
  for (int i = 0; i < kLargeSetFuzz; ++i) {
    const std::string u = random_utterance(rng, vocab, 6);
    const MatchResult filtered = match(ast, e.env(), u);
    const MatchResult full = match(ast, e.env(), u, CompileOptions{false});
    if (filtered.matched == full.matched && filtered.bindings == full.bindings) {
      ++agree;
    } else {
      c.expect(false, "disagreement on '" + u + "'; ");
    }
  }
  c.detail << "compiled elements " << compiled << ", " << agree << "/" << kLargeSetFuzz << " agree";
}

void generation(Check& c) {
  Env e;
  const NatexAst genre = parse(kGenreTemplate);
  std::set<std::string> oracle;
  for (const char* g : {"action", "horror", "drama"}) {
    for (const char* t : {"recently", "lately"}) oracle.insert(std::string("I watched lots of ") + g + " movies " + t);
  }
  std::map<std::string, int> seen;
  Rng rng(1000);
  for (int i = 0; i < kGenreDraws; ++i) {
    const auto g = generate(genre, e.env(), rng);
    if (!g) {
      c.expect(false, "blocked draw; ");
      continue;
    }
    c.expect(oracle.contains(g->text), "unexpected production '" + g->text + "'; ");
    ++seen[g->text];
  }
  c.expect(oracle.size() == kGenreProductions && seen.size() == kGenreProductions, "coverage; ");

  AstGenerator gen(500);
  int consistent = 0;
  for (int i = 0; i < kConsistencyAsts; ++i) {
    auto [ast, table] = gen.next();
    Env f;
    f.table = table;
    Rng grng(i);
    const auto g = generate(ast, f.env(), grng);
    if (!g) {
      c.expect(false, "blocked: " + format(ast) + "; ");
      continue;
    }
    const MatchResult r = match(ast, f.env(), g->text);
    Bindings expected;
    for (const auto& [k, v] : g->assignments) expected[k] = normalize(v);
    if (r.matched && r.bindings == expected) {
      ++consistent;
    } else {
      c.expect(false, "inconsistent: " + format(ast) + " / " + g->text + "; ");
    }
  }
  c.detail << seen.size() << "/" << kGenreProductions << " productions, " << consistent << "/" << kConsistencyAsts
           << " consistent";
}

std::shared_ptr<const CompositeFlow> pets_system(double priority) {
  std::string doc = read_file(data_path("pets.json"));
  const std::string marker = "(" + std::to_string(kRulePriority).substr(0, 3) + ")";
  doc.replace(doc.find(marker), marker.size(), "(" + std::to_string(priority) + ")");
  return std::make_shared<const CompositeFlow>(load_system_text(doc, data_path("")));
}

void rule_scenario(Check& c) {
  Conversation low(pets_system(kRulePriority), 0);
  low.open();
  const Exchange a = low.reply("I have a dog");
  const auto& vars = low.session().variables;
  c.expect(vars.get("USER_PET") == "dog", "USER_PET; ");
  c.expect(vars.get("USER_LIKE") == "dog", "USER_LIKE; ");
  c.expect(a.candidate && a.candidate->text == "I like dog too!" && a.candidate->priority == kRulePriority,
           "candidate; ");
  c.expect(a.decision == Decision::UseStateMachine && a.kind != OutcomeKind::RuleResponse, "0.5 arbitration; ");

  Conversation high(pets_system(kRaisedPriority), 0);
  high.open();
  const std::string before = high.session().qualified_state();
  const Exchange b = high.reply("I have a dog");
  c.expect(b.decision == Decision::UseCandidate && b.kind == OutcomeKind::RuleResponse &&
               b.text == "I like dog too!",
           "2.0 arbitration; ");
  c.expect(high.session().qualified_state() == before, "state changed; ");
  c.detail << "0.5 -> " << to_string(a.decision) << ", 2.0 -> " << to_string(b.decision) << " (state "
           << high.session().qualified_state() << ")";
}

std::size_t count_lines(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::size_t n = 0;
  for (std::string line; std::getline(in, line);) n += !line.empty();
  return n;
}

std::string movie_transcript(const std::filesystem::path& log_file, std::size_t* lines_added_by_gibberish) {
  auto log = std::make_shared<ErrorLog>(log_file);
  Conversation c(load_system(data_path("movies.json")), 42, log);
  std::string out = "S: " + c.open().text + "\n";
  const std::vector<std::string> script{"I watched avengers", "it was fun",     "I like music",
                                        "jazz mostly",        "asdf qwerty zxcv", "I saw Star Wars",
                                        "the first one",      "I read a book",  "ok", "inception"};
  for (const auto& input : script) {
    const std::size_t before = count_lines(log_file);
    const Exchange e = c.reply(input);
    if (input == "asdf qwerty zxcv" && lines_added_by_gibberish) {
      *lines_added_by_gibberish = e.kind == OutcomeKind::ErrorTransition ? count_lines(log_file) - before : 0;
    }
    out += "U: " + input + "\nS: " + e.text + "\n";
  }
  return out;
}

void movie_scenario(Check& c) {
  const auto dir = std::filesystem::temp_directory_path();
  const auto log1 = dir / ("natflow_acceptance_a_" + std::to_string(::getpid()) + ".jsonl");
  const auto log2 = dir / ("natflow_acceptance_b_" + std::to_string(::getpid()) + ".jsonl");
  std::filesystem::remove(log1);
  std::filesystem::remove(log2);
  std::size_t added = 0;
  const std::string first = movie_transcript(log1, &added);
  const std::string second = movie_transcript(log2, nullptr);
  c.expect(first == second, "transcripts differ; ");
  c.expect(added == 1, "gibberish appended " + std::to_string(added) + " records; ");
  std::ifstream in(log1);
  std::string line;
  bool found = false;
  while (std::getline(in, line)) {
    const json j = json::parse(line);
    found = found || (j["input"] == "asdf qwerty zxcv" && j["state"] == "c");
  }
  c.expect(found, "log record; ");
  std::filesystem::remove(log1);
  std::filesystem::remove(log2);
  c.detail << first.size() << "-byte transcript identical, " << added << " record for gibberish";
}

void recency(Check& c) {
  const auto system = load_system(data_path("recency.json"));
  int distinct_all = 0;
  for (int seed = 0; seed < kRecencySeeds; ++seed) {
    Conversation conv(system, seed);
    std::set<std::string> texts{conv.open().text};
    texts.insert(conv.reply("x").text);
    texts.insert(conv.reply("y").text);
    if (texts.size() == 3) {
      ++distinct_all;
    } else {
      c.expect(false, "seed " + std::to_string(seed) + "; ");
    }
  }
  c.detail << distinct_all << "/" << kRecencySeeds << " seeds gave 3 distinct responses";
}

std::vector<std::string> scripted(const std::shared_ptr<const CompositeFlow>& system, std::uint64_t seed,
                                  const std::vector<std::string>& inputs) {
  Conversation c(system, seed);
  std::vector<std::string> out{c.open().text};
  for (const auto& in : inputs) {
    if (!c.awaiting_user()) break;
    out.push_back(c.reply(in).text);
  }
  return out;
}

void composite(Check& c) {
  const auto system = load_system(data_path("composite/manifest.json"));
  Conversation jump(system, 5);
  jump.open();
  jump.reply("have you seen a good film");
  c.expect(jump.session().ns == "DF2", "jump did not switch; ");

  Conversation stay(system, 5);
  stay.open();
  stay.reply("have fun");
  c.expect(stay.session().ns == "DF1", "non-jump switched; ");

  const std::vector<std::string> script{"I saw star wars", "huh", "I like music", "asdf", "I watched parasite"};
  const auto bare = scripted(load_system(data_path("movies.json")), 8, script);
  const auto wrapped = scripted(load_system(data_path("composite/single.json")), 8, script);
  c.expect(bare == wrapped, "single-module transcript differs; ");
  c.detail << "jump -> " << jump.session().qualified_state() << ", non-jump -> " << stay.session().qualified_state()
           << ", single-module transcript " << (bare == wrapped ? "equal" : "differs");
}

void error_checking(Check& c) {
  const std::vector<std::pair<std::string, std::string>> fixtures{
      {"validate/unknown_function.json", "UnknownFunction"},
      {"validate/function_raises.json", "FunctionFailure"},
      {"validate/text_in_matcher.json", "TypeMismatch"},
      {"validate/unbound_variable.json", "UnboundVariable"},
  };
  for (const auto& [file, code] : fixtures) {
    std::ostringstream out;
    run_validate(data_path(file), false, out);
    const ValidationReport r = validate_file(data_path(file));
    c.expect(r.issues.size() == 1 && r.issues[0].code == code,
             file + " gave " + std::to_string(r.issues.size()) + " issue(s); ");
    c.expect(out.str().find("[" + code + "]") != std::string::npos, file + " output; ");
  }
  std::ostringstream out;
  const int clean = run_validate(data_path("movies.json"), false, out);
  c.expect(clean == 0, "clean fixture exit " + std::to_string(clean) + "; ");
  c.detail << fixtures.size() << " fixtures classified, clean exit " << clean;
}

void ontology(Check& c) {
  std::mt19937_64 rng(100);
  int agree = 0;
  for (int trial = 0; trial < kOntologyDags; ++trial) {
    const int n = std::uniform_int_distribution<int>(1, kOntologyMaxNodes)(rng);
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);  // labels unrelated to topological order
    std::map<std::string, std::vector<std::string>> adjacency;
    Ontology::Edges edges;
    for (int i = 0; i < n; ++i) {
      std::vector<std::string> kids;
      for (int j = i + 1; j < n; ++j) {
        if (std::bernoulli_distribution(0.12)(rng)) kids.push_back("n" + std::to_string(order[j]));
      }
      adjacency["n" + std::to_string(order[i])] = kids;
      edges.emplace_back("n" + std::to_string(order[i]), kids);
    }
    const Ontology o = Ontology::from_edges(edges);
    bool all = true;
    for (int i = 0; i < n; ++i) {
      const std::string label = "n" + std::to_string(i);
      all = all && ont_query(o, label) == dfs_descendants(adjacency, label);
    }
    agree += all;
    c.expect(all, "dag " + std::to_string(trial) + "; ");
  }
  bool rejected = false;
  try {
    load_system(data_path("validate/cycle.json"));
  } catch (const FlowError& e) {
    rejected = e.kind() == FlowError::Kind::CycleDetected;
  }
  c.expect(rejected, "cycle fixture loaded; ");
  c.detail << agree << "/" << kOntologyDags << " DAGs agree, cycle " << (rejected ? "rejected" : "accepted");
}

std::vector<std::string> session_script(int k) {
  const std::vector<std::string> pool{"I watched avengers", "I saw star wars", "I like music", "blah blah",
                                      "parasite",           "I like tv",       "nope",         "inception"};
  std::vector<std::string> out;
  for (int t = 0; t < kTurnsPerSession; ++t) out.push_back(pool[(k * 3 + t * (k + 1)) % pool.size()]);
  return out;
}

std::vector<std::string> http_run(httplib::Client& client, const std::string& id, const std::string& opening,
                                  const std::vector<std::string>& script) {
  std::vector<std::string> transcript{opening};
  for (std::size_t t = 0; t < script.size(); ++t) {
    json req{{"session_id", id}, {"text", script[t]}, {"turn", t}};
    auto res = client.Post("/api/chat", req.dump(), "application/json");
    if (!res || res->status != 200) {
      transcript.push_back("<failed>");
      break;
    }
    transcript.push_back(json::parse(res->body)["text"]);
  }
  return transcript;
}

void http_service(Check& c) {
  const auto system = load_system(data_path("movies.json"));
  auto service = std::make_shared<ChatService>(system, 1000);
  HttpServer server(service);
  const int port = server.bind("127.0.0.1", 0);
  c.expect(port > 0, "bind failed; ");
  if (port <= 0) return;
  server.start();

  httplib::Client client("127.0.0.1", port);
  std::vector<std::string> ids, openings;
  for (int k = 0; k < kParallelSessions; ++k) {
    auto res = client.Post("/api/session", "", "application/json");
    if (!res || res->status != 200) {
      c.expect(false, "create failed; ");
      server.stop();
      return;
    }
    const json j = json::parse(res->body);
    ids.push_back(j["session_id"]);
    openings.push_back(j["text"]);
  }
  c.expect(openings[0] == "Have you seen any movies lately?", "opening; ");

  std::vector<std::vector<std::string>> parallel(kParallelSessions);
  std::vector<std::thread> threads;
  for (int k = 0; k < kParallelSessions; ++k) {
    threads.emplace_back([&, k] {
      httplib::Client own("127.0.0.1", port);
      parallel[k] = http_run(own, ids[k], openings[k], session_script(k));
    });
  }
  for (auto& t : threads) t.join();

  auto stale = client.Post("/api/chat", json{{"session_id", ids[0]}, {"text", "hi"}, {"turn", 0}}.dump(),
                           "application/json");
  c.expect(stale && stale->status == 409, "out-of-order not 409; ");
  auto unknown = client.Post("/api/chat", json{{"session_id", "ffff"}, {"text", "hi"}}.dump(), "application/json");
  c.expect(unknown && unknown->status == 404, "unknown session not 404; ");
  server.stop();

  // Serial reference: the same sessions, created in the same order, run one after another.
  ChatService serial(system, 1000);
  int identical = 0;
  std::vector<std::string> serial_ids, serial_openings;
  for (int k = 0; k < kParallelSessions; ++k) {
    const json j = json::parse(serial.create_session().body);
    serial_ids.push_back(j["session_id"]);
    serial_openings.push_back(j["text"]);
  }
  for (int k = 0; k < kParallelSessions; ++k) {
    std::vector<std::string> transcript{serial_openings[k]};
    const auto script = session_script(k);
    for (std::size_t t = 0; t < script.size(); ++t) {
      const Reply r = serial.chat(json{{"session_id", serial_ids[k]}, {"text", script[t]}, {"turn", t}}.dump());
      transcript.push_back(r.status == 200 ? json::parse(r.body)["text"].get<std::string>() : "<failed>");
    }
    if (transcript == parallel[k]) {
      ++identical;
    } else {
      c.expect(false, "session " + std::to_string(k) + " differs; ");
    }
  }
  c.detail << "409/404 ok, " << identical << "/" << kParallelSessions << " parallel transcripts equal serial";
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<void(Check&)>>> criteria{
      {"regex fidelity", regex_fidelity},     {"matching captures", movie_captures},
      {"dynamic compilation", dynamic_compilation}, {"generation", generation},
      {"update rule scenario", rule_scenario}, {"movie flow scenario", movie_scenario},
      {"recency", recency},                   {"composite scenario", composite},
      {"error checking", error_checking},     {"ontology", ontology},
      {"http service", http_service},
  };
  int failures = 0;
  for (const auto& [name, run] : criteria) {
    Check c;
    const auto start = std::chrono::steady_clock::now();
    try {
      run(c);
    } catch (const std::exception& e) {
      c.ok = false;
      c.detail << " exception: " << e.what();
    }
    const auto ms =
        std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start).count();
    std::cout << (c.ok ? "PASS " : "FAIL ") << name << ": " << c.detail.str() << " (" << ms << " ms)\n";
    failures += !c.ok;
  }
  return failures;
}
