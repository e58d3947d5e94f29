#include "orderlens/session.hpp"

namespace orderlens {

std::optional<Retrigger> parse_retrigger(std::string_view s) {
  if (s == "every_turn") return Retrigger::every_turn;
  if (s == "on_provider_turn") return Retrigger::on_provider_turn;
  return std::nullopt;
}

std::string_view to_string(Retrigger r) {
  return r == Retrigger::every_turn ? "every_turn" : "on_provider_turn";
}

void SessionConfig::validate() const {
  if (window_turns < 1) throw ConfigError("window_turns must be at least 1");
  if (top_k < 1) throw ConfigError("top_k must be at least 1");
}

SessionState::SessionState(std::size_t window_turns) : capacity_(window_turns) {
  if (window_turns < 1) throw ConfigError("window_turns must be at least 1");
}

void SessionState::push_turn(TranscriptChunk chunk) {
  buffer_.push_back(std::move(chunk));
  if (buffer_.size() > capacity_) buffer_.pop_front();
  ++turn_counter_;
}

std::string window_text(const SessionState& state) {
  std::string joined;
  for (const auto& t : state.buffer()) {
    if (!joined.empty()) joined += ' ';
    joined += t.text;
  }
  return "CONTEXT: " + joined;
}

bool should_retrigger(const SessionConfig& config, const TranscriptChunk& latest) {
  return config.retrigger == Retrigger::every_turn || latest.speaker == Speaker::provider;
}

RetrievalResult retrieve_now(const SessionState& state, const VectorIndex& index,
                             const EncoderParams& params, const EncoderConfig& encoder,
                             const SessionConfig& config) {
  if (state.empty()) return {};
  return search(encode(window_text(state), params, encoder), index, config.top_k);
}

}  // namespace orderlens
