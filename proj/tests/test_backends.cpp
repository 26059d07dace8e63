#include <gtest/gtest.h>

#include <nlohmann/json.hpp>

#include "harness.hpp"
#include "pdl/backends.hpp"
#include "pdl/error.hpp"

namespace pdl {
namespace {

std::vector<std::string> collect(ModelBackend& backend, const ModelRequest& req, std::string* full) {
  std::vector<std::string> chunks;
  *full = backend.generate(req, [&](std::string_view c) { chunks.emplace_back(c); });
  return chunks;
}

ModelRequest ask(std::string id, std::string user) {
  ModelRequest r;
  r.model_id = std::move(id);
  r.messages = {{"system", "sys"}, {"user", std::move(user)}};
  return r;
}

class Recorder final : public ModelBackend {
 public:
  explicit Recorder(std::vector<std::string> chunks) : chunks_(std::move(chunks)) {}
  std::string generate(const ModelRequest& request, const ChunkCallback& on_chunk) override {
    seen.push_back(request.model_id);
    std::string all;
    for (const auto& c : chunks_) {
      all += c;
      if (on_chunk) on_chunk(c);
    }
    return all;
  }
  std::vector<std::string> seen;

 private:
  std::vector<std::string> chunks_;
};

TEST(Backends, EchoReversesLastUserMessage) {
  EchoBackend echo;
  std::string full;
  const auto chunks = collect(echo, ask("m", "ab"), &full);
  EXPECT_EQ(full, "ba");
  EXPECT_EQ(echo.generate(ask("m", "hello world"), nullptr), "dlrow olleh");
  ModelRequest none;
  EXPECT_EQ(echo.generate(none, nullptr), "");
}

TEST(Backends, ChunksConcatenateToResult) {
  EchoBackend echo;
  std::string full;
  const auto chunks = collect(echo, ask("m", "three little words"), &full);
  std::string joined;
  for (const auto& c : chunks) joined += c;
  EXPECT_EQ(joined, full);
  EXPECT_EQ(chunks.size(), 3u);
}

TEST(Backends, ScriptedReplaysAndRecords) {
  ScriptedBackend s({"one", "two"});
  EXPECT_EQ(s.generate(ask("a", "x"), nullptr), "one");
  EXPECT_EQ(s.remaining(), 1u);
  EXPECT_EQ(s.generate(ask("b", "y"), nullptr), "two");
  EXPECT_THROW(s.generate(ask("c", "z"), nullptr), BackendError);
  ASSERT_EQ(s.requests().size(), 3u);
  EXPECT_EQ(s.requests()[1].model_id, "b");
  EXPECT_EQ(s.requests()[1].messages.back().content, "y");
}

TEST(Backends, ScriptedFromFile) {
  auto s = ScriptedBackend::from_file(testing::fixture("chatbot/answers.json"));
  EXPECT_EQ(s->remaining(), 2u);
  EXPECT_THROW(ScriptedBackend::from_file(testing::fixture("nope.json")), BackendError);
  EXPECT_THROW(ScriptedBackend::from_file(testing::fixture("chatbot/chatbot.pdl")), Error);
}

TEST(StopFilter, CutsAtFirstStop) {
  std::string seen;
  StopFilter f({"\n\n", "END"}, [&](std::string_view c) { seen += c; });
  f.feed("hello");
  f.feed(" there\nEN");
  f.feed("D more");
  EXPECT_TRUE(f.stopped());
  EXPECT_EQ(f.finish(), "hello there\n");
  EXPECT_EQ(seen, "hello there\n");
}

TEST(StopFilter, StopSplitAcrossChunks) {
  std::vector<std::string> seen;
  StopFilter f({"\n\n"}, [&](std::string_view c) { seen.emplace_back(c); });
  f.feed("a\n");
  EXPECT_EQ(seen, std::vector<std::string>{"a"});
  f.feed("\nb");
  EXPECT_EQ(f.finish(), "a");
}

TEST(StopFilter, HeldTextIsReleased) {
  std::string seen;
  StopFilter f({"abc"}, [&](std::string_view c) { seen += c; });
  f.feed("xab");
  EXPECT_EQ(seen, "x");
  f.feed("d");
  EXPECT_EQ(seen, "xabd");
  f.feed("ab");
  EXPECT_EQ(f.finish(), "xabdab");
  EXPECT_FALSE(f.stopped());
}

TEST(StopFilter, ParametersForms) {
  Object p;
  EXPECT_TRUE(StopFilter::from_parameters(p).empty());
  p.set("stop", Value("x"));
  EXPECT_EQ(StopFilter::from_parameters(p), std::vector<std::string>{"x"});
  p.set("stop", Value(Array{Value("a"), Value("b")}));
  EXPECT_EQ(StopFilter::from_parameters(p), (std::vector<std::string>{"a", "b"}));
  p.set("stop", Value(3));
  EXPECT_THROW(StopFilter::from_parameters(p), BackendError);
  p.set("stop", Value(Array{Value(1)}));
  EXPECT_THROW(StopFilter::from_parameters(p), BackendError);
}

TEST(Registry, RoutesByPrefix) {
  BackendRegistry reg;
  auto a = std::make_shared<Recorder>(std::vector<std::string>{"A"});
  auto b = std::make_shared<Recorder>(std::vector<std::string>{"B"});
  reg.add("ollama", a);
  reg.add("*", b);
  EXPECT_EQ(reg.generate(ask("ollama/granite-code:8b", "x"), nullptr), "A");
  EXPECT_EQ(reg.generate(ask("gpt-4o", "x"), nullptr), "B");
  EXPECT_EQ(BackendRegistry::prefix_of("watsonx/ibm/granite"), "watsonx");
  EXPECT_EQ(BackendRegistry::prefix_of("plain"), "plain");
  EXPECT_EQ(a->seen, std::vector<std::string>{"ollama/granite-code:8b"});
}

TEST(Registry, StripsColonRoutingTag) {
  BackendRegistry reg;
  auto a = std::make_shared<Recorder>(std::vector<std::string>{"A"});
  reg.add("local", a);
  reg.generate(ask("local:llama3", "x"), nullptr);
  EXPECT_EQ(a->seen, std::vector<std::string>{"llama3"});
}

TEST(Registry, MissingBackend) {
  BackendRegistry reg;
  EXPECT_TRUE(reg.empty());
  try {
    reg.resolve("m");
    FAIL();
  } catch (const BackendError& e) {
    EXPECT_STREQ(e.what(), "no model backend for 'm'");
  }
}

TEST(Registry, StopAppliesToStreamedChunks) {
  BackendRegistry reg;
  reg.add("*", std::make_shared<Recorder>(std::vector<std::string>{"Thought one\n", "\nAct: x"}));
  ModelRequest req = ask("m", "x");
  req.parameters.set("stop", Value("\n\n"));
  std::string streamed;
  EXPECT_EQ(reg.generate(req, [&](std::string_view c) { streamed += c; }), "Thought one");
  EXPECT_EQ(streamed, "Thought one");
}

TEST(FlattenChat, DefaultTemplate) {
  EXPECT_EQ(flatten_chat({{"system", "be brief"}, {"user", "hi"}}), "system: be brief\nuser: hi\n");
  EXPECT_EQ(flatten_chat({}), "");
}

TEST(FlattenChat, CustomTemplateLeavesContentBraces) {
  ChatTemplate t{"<|{role}|>{content}</s>"};
  EXPECT_EQ(flatten_chat({{"user", "{role} {content}"}}, t), "<|user|>{role} {content}</s>");
}

TEST(Http, RequestBodyShape) {
  ModelRequest req = ask("granite", "hi");
  req.parameters.set("temperature", Value(0));
  const auto body = nlohmann::json::parse(HttpChatBackend::request_body(req, true));
  EXPECT_EQ(body["model"], "granite");
  ASSERT_EQ(body["messages"].size(), 2u);
  EXPECT_EQ(body["messages"][1]["role"], "user");
  EXPECT_EQ(body["messages"][1]["content"], "hi");
  EXPECT_EQ(body["temperature"], 0);
  EXPECT_EQ(body["stream"], true);
  EXPECT_FALSE(nlohmann::json::parse(HttpChatBackend::request_body(req, false)).contains("stream"));
}

TEST(Http, StreamingAndWholeAgree) {
  testing::StubChatServer server;
  const ModelRequest req = ask("m", "abcdefghijklmnop");
  const std::string expected = testing::StubChatServer::reply_for(req.messages);

  HttpChatBackend streaming({server.base_url(), "", true});
  std::vector<std::string> chunks;
  EXPECT_EQ(streaming.generate(req, [&](std::string_view c) { chunks.emplace_back(c); }), expected);
  EXPECT_GT(chunks.size(), 3u);

  HttpChatBackend whole({server.base_url(), "", false});
  chunks.clear();
  EXPECT_EQ(whole.generate(req, [&](std::string_view c) { chunks.emplace_back(c); }), expected);
  EXPECT_EQ(chunks, std::vector<std::string>{expected});
  EXPECT_EQ(server.bodies().size(), 2u);
}

TEST(Http, ConnectionFailure) {
  HttpChatBackend dead({"http://127.0.0.1:1/v1", "", false, std::chrono::seconds(2)});
  EXPECT_THROW(dead.generate(ask("m", "x"), nullptr), BackendError);
  EXPECT_THROW(HttpChatBackend({"not a url", "", false}).generate(ask("m", "x"), nullptr), BackendError);
}

TEST(Http, ErrorStatusIsReported) {
  testing::StubChatServer server;
  HttpChatBackend wrong({server.base_url() + "/missing", "", false});
  try {
    wrong.generate(ask("m", "x"), nullptr);
    FAIL();
  } catch (const BackendError& e) {
    EXPECT_NE(std::string(e.what()).find("HTTP 404"), std::string::npos);
  }
}

CommandRunner::Config python(const std::string& script, bool sandbox = false) {
  CommandRunner::Config c;
  c.argv = {"python3", "-c", script};
  c.sandbox = sandbox;
  c.timeout = std::chrono::milliseconds(10000);
  return c;
}

TEST(CommandRunner, LastLineAsJson) {
  Session s;
  CommandRunner r(python("import sys\nsrc = sys.stdin.read()\nprint('log')\nprint('{\"len\": %d}' % len(src))"));
  EXPECT_EQ(to_json(r.run("abcd", s)), R"({"len": 4})");
}

TEST(CommandRunner, PlainTextWhenNotJson) {
  Session s;
  CommandRunner r(python("print('line one')\nprint('two words')"));
  EXPECT_EQ(r.run("", s), Value("line one\ntwo words"));
}

TEST(CommandRunner, SessionRoundTrip) {
  const std::string script =
      "import json, os\n"
      "p = os.environ['PDL_SESSION_FILE']\n"
      "st = json.load(open(p))\n"
      "st['n'] = st.get('n', 0) + 1\n"
      "json.dump(st, open(p, 'w'))\n"
      "print(st['n'])\n";
  Session s;
  CommandRunner r(python(script));
  EXPECT_EQ(r.run("", s), Value(1));
  EXPECT_EQ(r.run("", s), Value(2));
  EXPECT_EQ(to_json(s.store.at("command")), R"({"n": 2})");
}

TEST(CommandRunner, NonzeroExitCarriesStderr) {
  Session s;
  CommandRunner r(python("import sys\nsys.stderr.write('boom\\n')\nsys.exit(3)"));
  try {
    r.run("", s);
    FAIL();
  } catch (const BackendError& e) {
    EXPECT_STREQ(e.what(), "command 'python3' exited with status 3: boom");
  }
}

TEST(CommandRunner, Timeout) {
  Session s;
  auto c = python("import time\ntime.sleep(5)");
  c.timeout = std::chrono::milliseconds(200);
  CommandRunner r(c);
  EXPECT_THROW(r.run("", s), BackendError);
}

TEST(CommandRunner, SandboxHidesEnvironment) {
  ::setenv("PDL_TEST_SECRET", "visible", 1);
  Session s;
  const std::string script = "import os\nprint(os.environ.get('PDL_TEST_SECRET', 'hidden'))\nprint(os.getcwd())";
  CommandRunner open_runner(python(script));
  EXPECT_EQ(open_runner.run("", s).as_string().substr(0, 8), "visible\n");
  CommandRunner boxed(python(script, true));
  const std::string out = boxed.run("", s).as_string();
  EXPECT_EQ(out.substr(0, 7), "hidden\n");
  EXPECT_NE(out.find("pdl-"), std::string::npos);
}

TEST(CommandRunner, MissingProgram) {
  Session s;
  CommandRunner::Config c;
  c.argv = {"/nonexistent/program"};
  CommandRunner r(c);
  EXPECT_THROW(r.run("", s), BackendError);
  EXPECT_THROW(CommandRunner(CommandRunner::Config{}), BackendError);
}

TEST(ExprRunner, EvaluatesExpression) {
  Session s;
  ExprRunner r;
  EXPECT_EQ(r.run("23 - 5 * 3", s), Value(8));
  EXPECT_EQ(to_json(r.run("[1, 2] + [3]", s)), "[1, 2, 3]");
  EXPECT_THROW(r.run("x + 1", s), Error);
}

TEST(RunnerRegistry, UnknownLanguage) {
  RunnerRegistry reg;
  Session s;
  reg.add("expr", std::make_shared<ExprRunner>());
  EXPECT_TRUE(reg.has("expr"));
  EXPECT_EQ(reg.run("expr", "1", s), Value(1));
  try {
    reg.run("python", "1", s);
    FAIL();
  } catch (const BackendError& e) {
    EXPECT_NE(std::string(e.what()).find("--runner python=command:python3"), std::string::npos);
  }
}

}  // namespace
}  // namespace pdl
