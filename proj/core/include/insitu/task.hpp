#pragma once

#include <coroutine>
#include <exception>
#include <optional>
#include <utility>

namespace insitu {

template <class T> class Task;

namespace detail {

struct TaskPromiseBase {
  std::coroutine_handle<> continuation;
  std::exception_ptr error;

  std::suspend_always initial_suspend() noexcept { return {}; }

  struct FinalAwaiter {
    bool await_ready() noexcept { return false; }
    template <class P> std::coroutine_handle<> await_suspend(std::coroutine_handle<P> h) noexcept
    {
      if (auto next = h.promise().continuation)
        return next;
      return std::noop_coroutine();
    }
    void await_resume() noexcept {}
  };
  FinalAwaiter final_suspend() noexcept { return {}; }

  void unhandled_exception() noexcept { error = std::current_exception(); }
};

template <class T> struct TaskPromise : TaskPromiseBase {
  std::optional<T> value;
  Task<T> get_return_object() noexcept;
  template <class U> void return_value(U&& v) { value.emplace(std::forward<U>(v)); }
};

template <> struct TaskPromise<void> : TaskPromiseBase {
  Task<void> get_return_object() noexcept;
  void return_void() noexcept {}
};

} // namespace detail

/// Lazily started coroutine. Actor bodies are Task<void>; helpers may return a value.
/// Awaiting a task starts it and resumes the awaiter once it finishes (in simulated time),
/// rethrowing any exception it raised.
template <class T = void> class [[nodiscard]] Task {
public:
  using promise_type = detail::TaskPromise<T>;
  using handle_type  = std::coroutine_handle<promise_type>;

  Task() = default;
  explicit Task(handle_type h) noexcept : handle_(h) {}
  Task(Task&& other) noexcept : handle_(std::exchange(other.handle_, {})) {}
  Task& operator=(Task&& other) noexcept
  {
    if (this != &other) {
      reset();
      handle_ = std::exchange(other.handle_, {});
    }
    return *this;
  }
  Task(const Task&)            = delete;
  Task& operator=(const Task&) = delete;
  ~Task() { reset(); }

  bool valid() const noexcept { return static_cast<bool>(handle_); }
  bool done() const noexcept { return !handle_ || handle_.done(); }
  handle_type handle() const noexcept { return handle_; }
  std::exception_ptr error() const noexcept { return handle_ ? handle_.promise().error : nullptr; }

  bool await_ready() const noexcept { return done(); }
  std::coroutine_handle<> await_suspend(std::coroutine_handle<> awaiting) noexcept
  {
    handle_.promise().continuation = awaiting;
    return handle_;
  }
  T await_resume()
  {
    auto& p = handle_.promise();
    if (p.error)
      std::rethrow_exception(p.error);
    if constexpr (!std::is_void_v<T>)
      return std::move(*p.value);
  }

private:
  void reset() noexcept
  {
    if (handle_)
      handle_.destroy();
    handle_ = {};
  }

  handle_type handle_;
};

namespace detail {
template <class T> Task<T> TaskPromise<T>::get_return_object() noexcept
{
  return Task<T>{std::coroutine_handle<TaskPromise<T>>::from_promise(*this)};
}
inline Task<void> TaskPromise<void>::get_return_object() noexcept
{
  return Task<void>{std::coroutine_handle<TaskPromise<void>>::from_promise(*this)};
}
} // namespace detail

} // namespace insitu
