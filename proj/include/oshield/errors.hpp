#pragma once

#include <stdexcept>
#include <string>

namespace oshield {

// Error types are plain exceptions; callers that care about the category catch
// the concrete type, everyone else catches std::exception.

struct InvalidArena : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct InvalidMap : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NotADecisionLocation : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct AllZeroWeights : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct ActionNotEnabled : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct PolicyReturnedBlockedTask : std::logic_error {
  using std::logic_error::logic_error;
};

struct HorizonZero : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct NotPostDecisionState : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct NoFirstDecisionState : std::logic_error {
  using std::logic_error::logic_error;
};

struct TaskNotAvailable : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct DeltaOutOfRange : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct ArenaTooSmall : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct GameOver : std::logic_error {
  using std::logic_error::logic_error;
};

struct DivergenceDetected : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace oshield
