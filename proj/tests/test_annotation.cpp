#include <doctest.h>

#include <fstream>
#include <thread>

#include <httplib.h>

#include "splitqa/annotation.hpp"
#include "splitqa/error.hpp"
#include "splitqa/metrics.hpp"
#include "support.hpp"

using namespace splitqa;
using nlohmann::json;

namespace {

std::vector<SampledPair> pairs(std::size_t n) {
  std::vector<SampledPair> out;
  for (std::size_t i = 0; i < n; ++i)
    out.push_back({"p" + std::to_string(i), "Original " + std::to_string(i) + ", and more.",
                   "Original " + std::to_string(i) + ". More."});
  return out;
}

void rate_all(AnnotationStore& store, const std::string& task, const std::string& rater,
              const std::vector<int>& scores_per_pair) {
  for (std::size_t i = 0; i < scores_per_pair.size(); ++i)
    for (RatingMetric m : kRatingMetrics)
      store.submit_rating(task, {rater, "p" + std::to_string(i), m, scores_per_pair[i], {}});
}

struct RunningServer {
  AnnotationServer server;
  int port;
  std::thread thread;

  explicit RunningServer(AnnotationStore& store, std::string ui = {})
      : server(store, std::move(ui)), port(server.bind_any_port("127.0.0.1")) {
    thread = std::thread([this] { server.listen_after_bind(); });
    server.wait_until_ready();
  }
  ~RunningServer() {
    server.stop();
    thread.join();
  }
};

}  // namespace

TEST_SUITE("annotation") {

TEST_CASE("create_task is idempotent and validates") {
  testing::TempDir dir;
  AnnotationStore store(dir.path());
  const auto t1 = store.create_task(pairs(50), TaskKind::quality_rating);
  CHECK(t1.pairs.size() == 50);
  CHECK(store.create_task(pairs(50), TaskKind::quality_rating).task_id == t1.task_id);
  CHECK(store.create_task(pairs(50), TaskKind::edit_classification).task_id != t1.task_id);
  CHECK_THROWS_AS(store.create_task({}, TaskKind::quality_rating), ValidationError);
  auto dup = pairs(2);
  dup[1].pair_id = "p0";
  CHECK_THROWS_AS(store.create_task(dup, TaskKind::quality_rating), ValidationError);
  CHECK(store.task_ids().size() == 2);
  CHECK_THROWS_AS(store.task("missing"), NotFound);
}

TEST_CASE("next_item") {
  testing::TempDir dir;
  AnnotationStore store(dir.path());
  const auto t = store.create_task(pairs(50), TaskKind::quality_rating).task_id;
  auto next = store.next_item(t, "r1");
  CHECK_FALSE(next.done);
  CHECK(next.index == 0);
  CHECK(next.remaining == 50);

  store.submit_rating(t, {"r1", "p0", RatingMetric::fluency, 4, {}});
  store.submit_rating(t, {"r1", "p0", RatingMetric::relative_simplicity, 4, {}});
  next = store.next_item(t, "r1");
  CHECK(next.index == 0);
  CHECK(next.pair.pair_id == "p0");

  store.submit_rating(t, {"r1", "p0", RatingMetric::content_preservation, 4, {}});
  next = store.next_item(t, "r1");
  CHECK(next.index == 1);
  CHECK(next.remaining == 49);
  CHECK(store.next_item(t, "r2").index == 0);

  rate_all(store, t, "r1", std::vector<int>(50, 3));
  CHECK(store.next_item(t, "r1").done);
  CHECK(store.next_item(t, "r1").remaining == 0);
  CHECK_THROWS_AS(store.next_item("nope", "r1"), NotFound);
}

TEST_CASE("submission validation and last write wins") {
  testing::TempDir dir;
  AnnotationStore store(dir.path());
  const auto t = store.create_task(pairs(3), TaskKind::quality_rating).task_id;
  store.submit_rating(t, {"r1", "p1", RatingMetric::fluency, 4, {}});
  CHECK_THROWS_AS(store.submit_rating(t, {"r1", "p1", RatingMetric::fluency, 6, {}}), ValidationError);
  CHECK_THROWS_AS(store.submit_rating(t, {"r1", "p1", RatingMetric::fluency, 0, {}}), ValidationError);
  CHECK_THROWS_AS(store.submit_rating(t, {"r1", "p9", RatingMetric::fluency, 3, {}}), NotFound);
  CHECK_THROWS_AS(store.submit_rating(t, {"", "p1", RatingMetric::fluency, 3, {}}), ValidationError);
  CHECK_THROWS_AS(store.submit_edit_label(t, {"p1", "r1", EditCategory::inter_event}), ValidationError);

  // A batch with one bad record writes nothing.
  CHECK_THROWS(store.submit_ratings(t, {{"r2", "p0", RatingMetric::fluency, 5, {}},
                                        {"r2", "p0", RatingMetric::fluency, 9, {}}}));
  CHECK(store.ratings(t).size() == 1);

  store.submit_rating(t, {"r1", "p1", RatingMetric::fluency, 5, {}});
  const auto rs = store.ratings(t);
  REQUIRE(rs.size() == 1);
  CHECK(rs[0].score == 5);
  CHECK(rs[0].timestamp.size() == 20);
  CHECK(store.agreement_report(t)["metrics"]["fluency"]["mean"] == 5.0);
}

TEST_CASE("reports") {
  testing::TempDir dir;
  AnnotationStore store(dir.path());
  const auto t = store.create_task(pairs(5), TaskKind::quality_rating).task_id;
  rate_all(store, t, "r1", {5, 4, 3, 4, 2});
  auto report = store.agreement_report(t);
  CHECK(report["metrics"]["fluency"]["mean"] == doctest::Approx(3.6));
  CHECK(report["metrics"]["fluency"]["alpha"].is_null());
  CHECK(report["averaged_alpha"].is_null());

  rate_all(store, t, "r2", {5, 4, 3, 4, 2});
  report = store.agreement_report(t);
  for (RatingMetric m : kRatingMetrics) {
    CHECK(report["metrics"][std::string(to_string(m))]["alpha"] == 1.0);
    CHECK(report["metrics"][std::string(to_string(m))]["n"] == 10);
  }
  CHECK(report["averaged_alpha"] == 1.0);
  CHECK(report["raters"] == json::array({"r1", "r2"}));
  CHECK(report["pairs"][0]["ratings"]["fluency"] == 2);
}

TEST_CASE("report numbers equal the metric functions on the same data") {
  testing::TempDir dir;
  AnnotationStore store(dir.path());
  const auto t = store.create_task(pairs(4), TaskKind::quality_rating).task_id;
  rate_all(store, t, "a", {1, 2, 3, 4});
  rate_all(store, t, "b", {2, 2, 5, 4});
  store.submit_rating(t, {"c", "p0", RatingMetric::fluency, 3, {}});
  const auto report = store.agreement_report(t);

  metrics::RatingMatrix m = {{1.0, 2.0, 3.0}, {2.0, 2.0, std::nullopt}, {3.0, 5.0, std::nullopt},
                             {4.0, 4.0, std::nullopt}};
  const double alpha = metrics::krippendorff_alpha(m);
  const auto summary = metrics::describe({1, 2, 3, 4, 2, 2, 5, 4, 3});
  CHECK(report["metrics"]["fluency"]["alpha"].get<double>() == alpha);
  CHECK(report["metrics"]["fluency"]["mean"].get<double>() == summary.mean);
  CHECK(report["metrics"]["fluency"]["std"].get<double>() == summary.std);
}

TEST_CASE("edit classification task") {
  testing::TempDir dir;
  AnnotationStore store(dir.path());
  const auto t = store.create_task(pairs(3), TaskKind::edit_classification).task_id;
  CHECK_THROWS_AS(store.submit_rating(t, {"r1", "p0", RatingMetric::fluency, 3, {}}), ValidationError);
  store.submit_edit_label(t, {"p0", "r1", EditCategory::inter_event});
  CHECK(store.next_item(t, "r1").index == 1);
  store.submit_edit_label(t, {"p1", "r1", EditCategory::intra_event_success});
  store.submit_edit_label(t, {"p1", "r2", EditCategory::intra_event_failure});
  const auto report = store.agreement_report(t);
  CHECK(report["distribution"]["resolved"] == 1);
  CHECK(report["distribution"]["unresolved"] == 1);
  CHECK(report["pairs"][1]["labels"] == 2);
}

TEST_CASE("log replay survives restart and a torn final line") {
  testing::TempDir dir;
  std::string t;
  {
    AnnotationStore store(dir.path());
    t = store.create_task(pairs(3), TaskKind::quality_rating).task_id;
    store.submit_rating(t, {"r1", "p0", RatingMetric::fluency, 4, {}});
    store.submit_rating(t, {"r1", "p0", RatingMetric::fluency, 2, {}});
    store.submit_rating(t, {"r1", "p1", RatingMetric::fluency, 5, {}});
  }
  {
    std::ofstream log(dir.path() / "tasks" / t / "log.jsonl", std::ios::app);
    log << R"({"type":"rating","rater_id":"r1","pair_id":"p2","met)";
  }
  AnnotationStore reopened(dir.path());
  auto rs = reopened.ratings(t);
  REQUIRE(rs.size() == 2);
  CHECK(rs[0].score == 2);
  CHECK(rs[1].score == 5);
  reopened.submit_rating(t, {"r1", "p2", RatingMetric::fluency, 1, {}});
  AnnotationStore again(dir.path());
  CHECK(again.ratings(t).size() == 3);
}

TEST_CASE("concurrent raters never lose records") {
  testing::TempDir dir;
  AnnotationStore store(dir.path());
  const auto t = store.create_task(pairs(10), TaskKind::quality_rating).task_id;
  std::vector<std::thread> threads;
  for (int r = 0; r < 4; ++r)
    threads.emplace_back([&, r] { rate_all(store, t, "r" + std::to_string(r), std::vector<int>(10, 1 + r)); });
  for (auto& th : threads) th.join();
  CHECK(store.ratings(t).size() == 4 * 10 * 3);
  AnnotationStore reopened(dir.path());
  CHECK(reopened.ratings(t).size() == 120);
}

TEST_CASE("HTTP endpoints") {
  testing::TempDir dir;
  AnnotationStore store(dir.path());
  RunningServer running(store);
  httplib::Client client("127.0.0.1", running.port);

  json create = {{"kind", "quality_rating"}, {"pairs", json::array()}};
  for (const auto& p : pairs(5))
    create["pairs"].push_back({{"pair_id", p.pair_id}, {"original", p.original}, {"candidate", p.candidate}});
  auto res = client.Post("/tasks", create.dump(), "application/json");
  REQUIRE(res);
  CHECK(res->status == 201);
  const std::string id = json::parse(res->body)["task_id"];
  CHECK(client.Post("/tasks", create.dump(), "application/json")->body == res->body);

  res = client.Get("/tasks/" + id);
  CHECK(res->status == 200);
  CHECK(json::parse(res->body)["pairs"].size() == 5);

  res = client.Get("/tasks/" + id + "/next?rater=r1");
  CHECK(res->status == 200);
  auto next = json::parse(res->body);
  CHECK(next["done"] == false);
  CHECK(next["remaining"] == 5);
  CHECK(next["pair"]["pair_id"] == "p0");
  CHECK(client.Get("/tasks/" + id + "/next")->status == 400);

  for (const char* rater : {"r1", "r2"}) {
    for (int i = 0; i < 5; ++i) {
      json batch = json::array();
      for (const char* m : {"fluency", "relative_simplicity", "content_preservation"})
        batch.push_back({{"rater_id", rater}, {"pair_id", "p" + std::to_string(i)}, {"metric", m}, {"score", 1 + i}});
      res = client.Post("/tasks/" + id + "/ratings", batch.dump(), "application/json");
      CHECK(res->status == 201);
    }
  }
  res = client.Post("/tasks/" + id + "/ratings",
                    json{{"rater_id", "r1"}, {"pair_id", "p0"}, {"metric", "fluency"}, {"score", 6}}.dump(),
                    "application/json");
  CHECK(res->status == 400);
  CHECK(json::parse(res->body).contains("error"));
  res = client.Post("/tasks/" + id + "/ratings",
                    json{{"rater_id", "r1"}, {"pair_id", "zz"}, {"metric", "fluency"}, {"score", 3}}.dump(),
                    "application/json");
  CHECK(res->status == 404);
  CHECK(client.Post("/tasks/" + id + "/ratings", "{oops", "application/json")->status == 400);
  CHECK(client.Post("/tasks/" + id + "/edit-labels",
                    json{{"rater_id", "r1"}, {"pair_id", "p0"}, {"category", "inter_event"}}.dump(),
                    "application/json")->status == 400);

  next = json::parse(client.Get("/tasks/" + id + "/next?rater=r1")->body);
  CHECK(next["done"] == true);

  const json report = json::parse(client.Get("/tasks/" + id + "/report")->body);
  CHECK(report["averaged_alpha"] == 1.0);
  CHECK(report["metrics"]["fluency"]["mean"] == 3.0);

  CHECK(client.Get("/tasks/ffff/report")->status == 404);
  CHECK(client.Post("/tasks", R"({"kind":"quality_rating","pairs":[]})", "application/json")->status == 400);
  res = client.Get("/");
  CHECK(res->status == 200);
  CHECK(res->body.find("<html") != std::string::npos);
}

TEST_CASE("HTTP edit labels and static UI") {
  testing::TempDir dir, ui;
  testing::spit(ui / "index.html", "<p>ui</p>");
  AnnotationStore store(dir.path());
  const auto t = store.create_task(pairs(2), TaskKind::edit_classification).task_id;
  RunningServer running(store, ui.str());
  httplib::Client client("127.0.0.1", running.port);
  auto res = client.Post("/tasks/" + t + "/edit-labels",
                         json{{"rater_id", "r1"}, {"pair_id", "p0"}, {"category", "intra_event_success"}}.dump(),
                         "application/json");
  CHECK(res->status == 201);
  CHECK(client.Post("/tasks/" + t + "/edit-labels",
                    json{{"rater_id", "r1"}, {"pair_id", "p0"}, {"category", "nonsense"}}.dump(),
                    "application/json")->status == 400);
  CHECK(json::parse(client.Get("/tasks/" + t + "/report")->body)["distribution"]["resolved"] == 1);
  res = client.Get("/index.html");
  CHECK(res->status == 200);
  CHECK(res->body == "<p>ui</p>");
}

TEST_CASE("rating metric names") {
  CHECK(parse_rating_metric("relative_simplicity") == RatingMetric::relative_simplicity);
  CHECK_THROWS_AS(parse_rating_metric("speed"), ValidationError);
  CHECK(parse_task_kind("edit_classification") == TaskKind::edit_classification);
}

}
