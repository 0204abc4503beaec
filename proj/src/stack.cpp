#include "silk/stack.hpp"

#include <pthread.h>

#include <cstdint>
#include <exception>

namespace silk {

namespace {

thread_local std::uintptr_t stack_floor = 0;  // lowest safe address

struct Job {
  const std::function<void()>* fn;
  std::size_t bytes;
  std::exception_ptr error;
};

void* trampoline(void* arg) {
  auto* job = static_cast<Job*>(arg);
  char marker;
  auto top = reinterpret_cast<std::uintptr_t>(&marker);
  // Keep 8 MiB in reserve for library code below the guard.
  std::size_t reserve = std::size_t{8} << 20;
  stack_floor = job->bytes > reserve * 2 ? top - (job->bytes - reserve) : 0;
  try {
    (*job->fn)();
  } catch (...) {
    job->error = std::current_exception();
  }
  return nullptr;
}

}  // namespace

void with_large_stack(const std::function<void()>& fn, std::size_t stack_bytes) {
  Job job{&fn, stack_bytes, nullptr};
  pthread_attr_t attr;
  pthread_attr_init(&attr);
  pthread_attr_setstacksize(&attr, stack_bytes);
  pthread_t tid;
  int rc = pthread_create(&tid, &attr, &trampoline, &job);
  pthread_attr_destroy(&attr);
  if (rc != 0) {
    fn();
    return;
  }
  pthread_join(tid, nullptr);
  if (job.error) std::rethrow_exception(job.error);
}

void check_stack_headroom() {
  if (stack_floor == 0) return;
  char marker;
  if (reinterpret_cast<std::uintptr_t>(&marker) < stack_floor)
    throw ResourceLimitExceeded("recursion depth limit reached");
}

}  // namespace silk
