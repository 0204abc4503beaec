#pragma once

// Deep recursion support. Evaluation, parsing of runaway logs and
// justification walk recursive structures whose depth is bounded only by the
// operation limit, so those entry points run on a thread with a large stack.

#include <cstddef>
#include <functional>
#include <stdexcept>

namespace silk {

constexpr std::size_t kLargeStackBytes = std::size_t{1} << 30;

/// Runs `fn` on a fresh thread with `stack_bytes` of stack and waits for it.
/// Exceptions thrown by `fn` are rethrown in the caller.
void with_large_stack(const std::function<void()>& fn, std::size_t stack_bytes = kLargeStackBytes);

class ResourceLimitExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Throws ResourceLimitExceeded when the current thread is close to the end
/// of a stack registered by with_large_stack. No-op elsewhere.
void check_stack_headroom();

}  // namespace silk
