#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <string_view>

#include "orderlens/corpus.hpp"
#include "orderlens/encoder.hpp"
#include "orderlens/index.hpp"

namespace orderlens {

enum class Retrigger { every_turn, on_provider_turn };
std::optional<Retrigger> parse_retrigger(std::string_view s);
std::string_view to_string(Retrigger r);

struct SessionConfig {
  std::size_t window_turns = 6;
  std::size_t top_k = 5;
  Retrigger retrigger = Retrigger::every_turn;

  void validate() const;
};

// Rolling window over the most recent transcript turns of one conversation.
class SessionState {
 public:
  explicit SessionState(std::size_t window_turns);

  // Appends, evicting the oldest turn when over capacity.
  void push_turn(TranscriptChunk chunk);

  const std::deque<TranscriptChunk>& buffer() const noexcept { return buffer_; }
  std::size_t capacity() const noexcept { return capacity_; }
  std::uint64_t turn_counter() const noexcept { return turn_counter_; }
  bool empty() const noexcept { return buffer_.empty(); }

 private:
  std::deque<TranscriptChunk> buffer_;
  std::size_t capacity_;
  std::uint64_t turn_counter_ = 0;
};

// "CONTEXT: " followed by the space-joined buffered texts, oldest first.
std::string window_text(const SessionState& state);

bool should_retrigger(const SessionConfig& config, const TranscriptChunk& latest);

// search(encode(window_text(state)), index, top_k); empty when the buffer is.
RetrievalResult retrieve_now(const SessionState& state, const VectorIndex& index,
                             const EncoderParams& params, const EncoderConfig& encoder,
                             const SessionConfig& config);

}  // namespace orderlens
