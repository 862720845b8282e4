#include "goatrag/session.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "goatrag/error.hpp"

namespace goatrag::service {

using nlohmann::json;

std::string_view to_string(SessionState s) noexcept {
  switch (s) {
    case SessionState::Open: return "open";
    case SessionState::Diagnosed: return "diagnosed";
    case SessionState::Expired: return "expired";
  }
  return "open";
}

void to_json(json& j, const Session& s) {
  json turns = json::array();
  for (const auto& t : s.transcript) turns.push_back({{"role", t.role}, {"text", t.text}, {"timestamp_ms", t.timestamp_ms}});
  j = {{"id", s.id},
       {"tree_id", s.tree_id.empty() ? json(nullptr) : json(s.tree_id)},
       {"evidence", s.evidence},
       {"transcript", std::move(turns)},
       {"state", to_string(s.state)},
       {"last_active_ms", s.last_active_ms}};
}

void from_json(const json& j, Session& s) {
  s.id = j.at("id").get<std::string>();
  s.tree_id = j.at("tree_id").is_null() ? std::string() : j.at("tree_id").get<std::string>();
  s.evidence = j.at("evidence").get<treex::Evidence>();
  s.transcript.clear();
  for (const auto& t : j.at("transcript")) {
    s.transcript.push_back({t.at("role").get<std::string>(), t.at("text").get<std::string>(),
                            t.at("timestamp_ms").get<std::int64_t>()});
  }
  const auto state = j.at("state").get<std::string>();
  s.state = state == "diagnosed" ? SessionState::Diagnosed
            : state == "expired" ? SessionState::Expired
                                 : SessionState::Open;
  s.last_active_ms = j.at("last_active_ms").get<std::int64_t>();
}

SessionStore::SessionStore(std::chrono::seconds ttl, Clock clock, std::optional<std::string> store_path)
    : ttl_(ttl), clock_(clock ? std::move(clock) : Clock([] { return std::chrono::system_clock::now(); })),
      path_(std::move(store_path)) {
  if (!path_ || !std::filesystem::exists(*path_)) return;
  std::ifstream in(*path_);
  std::stringstream ss;
  ss << in.rdbuf();
  json j;
  try {
    j = json::parse(ss.str());
    next_ = j.at("next").get<std::uint64_t>();
    for (const auto& item : j.at("sessions")) {
      auto slot = std::make_shared<Slot>();
      slot->session = item.get<Session>();
      committed_[slot->session.id] = slot->session;
      slots_[slot->session.id] = std::move(slot);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::FormatError, "session store " + *path_ + " is unreadable", e.what());
  }
}

std::int64_t SessionStore::now_ms() const {
  return std::chrono::duration_cast<std::chrono::milliseconds>(clock_().time_since_epoch()).count();
}

void SessionStore::refresh_state(Session& s) const {
  if (s.state == SessionState::Open && now_ms() - s.last_active_ms > ttl_.count() * 1000) {
    s.state = SessionState::Expired;
  }
}

void SessionStore::persist() const {
  if (!path_) return;
  json sessions = json::array();
  for (const auto& [id, session] : committed_) sessions.push_back(session);
  const std::string tmp = *path_ + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot write session store " + tmp);
    out << json{{"next", next_}, {"sessions", sessions}}.dump(2);
  }
  std::filesystem::rename(tmp, *path_);
}

std::string SessionStore::create(Session s) {
  std::lock_guard lock(mutex_);
  s.id = "sess-" + std::to_string(next_++);
  s.last_active_ms = now_ms();
  for (auto& t : s.transcript) {
    if (t.timestamp_ms == 0) t.timestamp_ms = s.last_active_ms;
  }
  auto slot = std::make_shared<Slot>();
  slot->session = std::move(s);
  const std::string id = slot->session.id;
  committed_[id] = slot->session;
  slots_[id] = std::move(slot);
  persist();
  return id;
}

std::shared_ptr<SessionStore::Slot> SessionStore::slot(const std::string& id) const {
  std::lock_guard lock(mutex_);
  auto it = slots_.find(id);
  if (it == slots_.end()) throw Error(ErrorCode::UnknownSession, "no session '" + id + "'", id);
  return it->second;
}

Session SessionStore::get(const std::string& id) const {
  auto s = slot(id);
  std::lock_guard lock(s->mutex);
  Session copy = s->session;
  refresh_state(copy);
  return copy;
}

Session SessionStore::update(const std::string& id, const std::function<void(Session&)>& fn) {
  auto s = slot(id);
  std::lock_guard lock(s->mutex);
  refresh_state(s->session);
  if (s->session.state != SessionState::Open) {
    throw Error(ErrorCode::SessionClosed,
                "session '" + id + "' is " + std::string(to_string(s->session.state)), id);
  }
  Session copy = s->session;
  fn(copy);
  copy.last_active_ms = now_ms();
  for (auto& t : copy.transcript) {
    if (t.timestamp_ms == 0) t.timestamp_ms = copy.last_active_ms;
  }
  s->session = copy;
  std::lock_guard map_lock(mutex_);
  committed_[id] = copy;
  persist();
  return copy;
}

std::size_t SessionStore::size() const {
  std::lock_guard lock(mutex_);
  return slots_.size();
}

}  // namespace goatrag::service
