#include "splitqa/annotation.hpp"

#include <httplib.h>

#include "splitqa/error.hpp"

namespace splitqa {

using nlohmann::json;

namespace {

const char* kPlaceholderPage =
    "<!doctype html><html><head><title>splitqa annotation</title></head>"
    "<body><p>Annotation API is running. Start the UI with --ui-dir to serve it here.</p>"
    "</body></html>";

void reply(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void reply_error(httplib::Response& res, int status, const std::string& message) {
  reply(res, status, json{{"error", message}});
}

SampledPair pair_from_json(const json& j) {
  return {j.at("pair_id").get<std::string>(), j.at("original").get<std::string>(),
          j.at("candidate").get<std::string>()};
}

RatingRecord rating_from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("rating must be an object");
  RatingRecord r;
  r.rater_id = j.at("rater_id").get<std::string>();
  r.pair_id = j.at("pair_id").get<std::string>();
  r.metric = parse_rating_metric(j.at("metric").get<std::string>());
  const json& score = j.at("score");
  if (!score.is_number_integer()) throw ValidationError("score must be an integer");
  r.score = score.get<int>();
  return r;
}

// Runs `f`, mapping store exceptions onto HTTP status codes.
template <class F>
void guarded(httplib::Response& res, F&& f) {
  try {
    f();
  } catch (const NotFound& e) {
    reply_error(res, 404, e.what());
  } catch (const ValidationError& e) {
    reply_error(res, 400, e.what());
  } catch (const json::exception& e) {
    reply_error(res, 400, std::string("malformed request: ") + e.what());
  } catch (const std::exception& e) {
    reply_error(res, 500, e.what());
  }
}

}  // namespace

struct AnnotationServer::Impl {
  AnnotationStore& store;
  httplib::Server server;

  explicit Impl(AnnotationStore& s) : store(s) {}
};

AnnotationServer::AnnotationServer(AnnotationStore& store, std::string ui_dir)
    : impl_(std::make_unique<Impl>(store)) {
  auto& srv = impl_->server;
  AnnotationStore* st = &store;

  srv.Post("/tasks", [st](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const json body = json::parse(req.body);
      const TaskKind kind = parse_task_kind(body.value("kind", "quality_rating"));
      std::vector<SampledPair> pairs;
      for (const auto& p : body.at("pairs")) pairs.push_back(pair_from_json(p));
      reply(res, 201, st->create_task(pairs, kind).to_json());
    });
  });

  srv.Get("/tasks", [st](const httplib::Request&, httplib::Response& res) {
    guarded(res, [&] { reply(res, 200, json{{"tasks", st->task_ids()}}); });
  });

  srv.Get(R"(/tasks/([0-9a-f]+))", [st](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { reply(res, 200, st->task(req.matches[1]).to_json()); });
  });

  srv.Get(R"(/tasks/([0-9a-f]+)/next)", [st](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const std::string rater = req.get_param_value("rater");
      if (rater.empty()) throw ValidationError("query parameter 'rater' is required");
      const NextItem next = st->next_item(req.matches[1], rater);
      json body = {{"done", next.done}, {"remaining", next.remaining}};
      if (!next.done) {
        body["index"] = next.index;
        body["pair"] = {{"pair_id", next.pair.pair_id},
                        {"original", next.pair.original},
                        {"candidate", next.pair.candidate}};
      }
      reply(res, 200, body);
    });
  });

  srv.Post(R"(/tasks/([0-9a-f]+)/ratings)", [st](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const json body = json::parse(req.body);
      std::vector<RatingRecord> records;
      if (body.is_array()) {
        for (const auto& r : body) records.push_back(rating_from_json(r));
      } else {
        records.push_back(rating_from_json(body));
      }
      st->submit_ratings(req.matches[1], records);
      reply(res, 201, json{{"accepted", records.size()}});
    });
  });

  srv.Post(R"(/tasks/([0-9a-f]+)/edit-labels)",
           [st](const httplib::Request& req, httplib::Response& res) {
             guarded(res, [&] {
               const json body = json::parse(req.body);
               EditLabel label{body.at("pair_id").get<std::string>(),
                               body.at("rater_id").get<std::string>(),
                               parse_edit_category(body.at("category").get<std::string>())};
               st->submit_edit_label(req.matches[1], label);
               reply(res, 201, json{{"accepted", 1}});
             });
           });

  srv.Get(R"(/tasks/([0-9a-f]+)/report)", [st](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { reply(res, 200, st->agreement_report(req.matches[1])); });
  });

  if (ui_dir.empty() || !srv.set_mount_point("/", ui_dir)) {
    srv.Get("/", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(kPlaceholderPage, "text/html");
    });
  }
}

AnnotationServer::~AnnotationServer() { stop(); }

bool AnnotationServer::listen(const std::string& host, int port) {
  return impl_->server.listen(host, port);
}

int AnnotationServer::bind_any_port(const std::string& host) {
  return impl_->server.bind_to_any_port(host);
}

bool AnnotationServer::listen_after_bind() { return impl_->server.listen_after_bind(); }

void AnnotationServer::stop() {
  if (impl_->server.is_running()) impl_->server.stop();
}

void AnnotationServer::wait_until_ready() const { impl_->server.wait_until_ready(); }

}  // namespace splitqa
