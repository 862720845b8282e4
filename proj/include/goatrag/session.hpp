#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "goatrag/treex.hpp"

namespace goatrag::service {

using Clock = std::function<std::chrono::system_clock::time_point()>;

enum class SessionState { Open, Diagnosed, Expired };
std::string_view to_string(SessionState s) noexcept;

struct Turn {
  std::string role;  // "user" or "assistant"
  std::string text;
  std::int64_t timestamp_ms = 0;
};

struct Session {
  std::string id;
  std::string tree_id;
  treex::Evidence evidence;
  std::vector<Turn> transcript;
  SessionState state = SessionState::Open;
  std::int64_t last_active_ms = 0;
};

void to_json(nlohmann::json& j, const Session& s);
void from_json(const nlohmann::json& j, Session& s);

/// In-memory sessions with idle expiry. Each session has its own mutex, so
/// updates to one session are serialized while different sessions proceed in
/// parallel. With a store path every change is written through to a JSON file
/// that is read back on construction.
class SessionStore {
 public:
  explicit SessionStore(std::chrono::seconds ttl, Clock clock = nullptr,
                        std::optional<std::string> store_path = std::nullopt);

  // Returns the new id ("sess-<n>").
  std::string create(Session s);

  // Copy of the session; an idle session past its TTL is reported Expired.
  // Throws UnknownSession.
  Session get(const std::string& id) const;

  /// Runs `fn` on a copy under the session's lock and commits the copy only if
  /// `fn` returns normally, so a throwing update leaves the session as it was.
  /// Throws UnknownSession, and SessionClosed unless the session is open.
  Session update(const std::string& id, const std::function<void(Session&)>& fn);

  std::size_t size() const;
  std::int64_t now_ms() const;

 private:
  struct Slot {
    std::mutex mutex;
    Session session;
  };
  std::shared_ptr<Slot> slot(const std::string& id) const;
  void refresh_state(Session& s) const;
  void persist() const;

  std::chrono::seconds ttl_;
  Clock clock_;
  std::optional<std::string> path_;
  mutable std::mutex mutex_;  // guards the map, the counter and the file
  std::map<std::string, std::shared_ptr<Slot>> slots_;
  // Last committed state of every session, written to the store file.
  std::map<std::string, Session> committed_;
  std::uint64_t next_ = 1;
};

}  // namespace goatrag::service
