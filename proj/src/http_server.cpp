#include <atomic>

#include <httplib.h>

#include "goatrag/error.hpp"
#include "goatrag/service.hpp"

namespace goatrag::service {

using nlohmann::json;

struct HttpServer::Impl {
  Service& service;
  httplib::Server server;
  std::atomic<bool> bound{false};

  explicit Impl(Service& s) : service(s) {}

  static void send(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  }

  // Runs a handler and turns every failure into an {code, message, detail}
  // body with a matching status.
  template <class F>
  static void guarded(httplib::Response& res, F&& fn) {
    try {
      send(res, 200, fn());
    } catch (const Error& e) {
      send(res, http_status(e.code()), error_body(e));
    } catch (const json::exception& e) {
      send(res, 400, json{{"code", "FormatError"}, {"message", "malformed JSON body"}, {"detail", e.what()}});
    } catch (const std::exception& e) {
      send(res, 500, json{{"code", "InternalError"}, {"message", e.what()}, {"detail", ""}});
    }
  }

  static json parse_body(const httplib::Request& req) {
    if (req.body.empty()) return json::object();
    return json::parse(req.body);
  }

  void routes() {
    server.Post("/ask", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] { return service.ask(parse_body(req)); });
    });
    server.Post(R"(/sessions/([^/]+)/evidence)", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] { return service.submit_evidence(req.matches[1].str(), parse_body(req)); });
    });
    server.Get(R"(/sessions/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] { return service.session(req.matches[1].str()); });
    });
    server.Get("/healthz", [this](const httplib::Request&, httplib::Response& res) {
      guarded(res, [&] { return service.health(); });
    });
    server.Post("/ingest", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        if (!req.is_multipart_form_data()) {
          throw Error(ErrorCode::FormatError, "ingest expects multipart/form-data");
        }
        std::map<std::string, std::string> files;
        for (const auto& [field, part] : req.files) {
          const std::string name = part.filename.empty() ? part.name : part.filename;
          if (!files.emplace(name, part.content).second) {
            throw Error(ErrorCode::DuplicateId, "file '" + name + "' uploaded twice");
          }
        }
        if (files.empty()) throw Error(ErrorCode::EmptyCorpus, "no files uploaded");
        return service.ingest(files);
      });
    });
  }
};

HttpServer::HttpServer(Service& service) : impl_(std::make_unique<Impl>(service)) { impl_->routes(); }

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  int bound_port = port;
  if (port == 0) {
    bound_port = impl_->server.bind_to_any_port(host);
  } else if (!impl_->server.bind_to_port(host, port)) {
    bound_port = -1;
  }
  if (bound_port < 0) {
    throw Error(ErrorCode::IoError, "cannot bind " + host + ":" + std::to_string(port));
  }
  impl_->bound = true;
  return bound_port;
}

void HttpServer::run() {
  if (!impl_->bound) throw Error(ErrorCode::IoError, "server is not bound");
  impl_->server.listen_after_bind();
}

void HttpServer::stop() {
  if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

bool HttpServer::running() const { return impl_->server.is_running(); }

}  // namespace goatrag::service
