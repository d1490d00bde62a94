#include <gtest/gtest.h>

#include <sstream>

#include "natflow/cli.hpp"
#include "natflow/document.hpp"
#include "support.hpp"

using namespace natflow;
using natflow::testing::data_path;

namespace {

struct Transcript {
  int code;
  std::string out;
  std::string err;
};

Transcript chat(const std::string& script, std::uint64_t seed = 7) {
  std::istringstream in(script);
  std::ostringstream out, err;
  const int code = run_chat(load_system(data_path("movies.json")), ChatOptions{seed, true, false},
                            std::make_shared<ErrorLog>(), in, out, err);
  return {code, out.str(), err.str()};
}

}  // namespace

TEST(Cli, ScriptedMovieConversation) {
  const Transcript t = chat("I watched star wars\n:quit\n");
  EXPECT_EQ(t.code, 0);
  EXPECT_EQ(t.out.rfind("S: Have you seen any movies lately?\n", 0), 0u) << t.out;
  EXPECT_NE(t.out.find("U: I watched star wars\n"), std::string::npos);
  EXPECT_NE(t.out.find("S: star wars is one of my favorite movies.\n"), std::string::npos) << t.out;
}

TEST(Cli, QuitStopsReading) {
  const Transcript t = chat(":quit\nI watched star wars\n");
  EXPECT_EQ(t.code, 0);
  EXPECT_EQ(t.out.find("star wars"), std::string::npos);
}

TEST(Cli, Commands) {
  const Transcript t = chat("I like music\n:state\n:vars\n");
  EXPECT_NE(t.out.find("c\n"), std::string::npos) << t.out;
  EXPECT_NE(t.out.find("ENT"), std::string::npos) << t.out;
  EXPECT_NE(t.out.find("music"), std::string::npos) << t.out;
}

TEST(Cli, TranscriptsAreReproducible) {
  const std::string script = "I saw avengers\nno idea\nI like tv\nasdf\ninception\nhmm\n";
  for (std::uint64_t seed : {0ull, 1ull, 99ull}) EXPECT_EQ(chat(script, seed).out, chat(script, seed).out);
}
