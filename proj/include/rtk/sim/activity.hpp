#pragma once

#include <coroutine>
#include <exception>
#include <optional>
#include <utility>

namespace rtk::sim {

/// Top-level body of a T-THREAD. Created suspended; the engine resumes it on
/// first dispatch. It may only give up the processor by awaiting one of the
/// engine's awaiters (directly or through nested Co<> calls).
class Activity {
public:
    struct promise_type {
        std::exception_ptr error;

        Activity get_return_object() noexcept {
            return Activity{std::coroutine_handle<promise_type>::from_promise(*this)};
        }
        std::suspend_always initial_suspend() noexcept { return {}; }
        std::suspend_always final_suspend() noexcept { return {}; }
        void return_void() noexcept {}
        void unhandled_exception() noexcept { error = std::current_exception(); }
    };

    Activity() noexcept = default;
    explicit Activity(std::coroutine_handle<promise_type> h) noexcept : handle_(h) {}
    Activity(Activity&& o) noexcept : handle_(std::exchange(o.handle_, {})) {}
    Activity& operator=(Activity&& o) noexcept {
        if (this != &o) {
            reset();
            handle_ = std::exchange(o.handle_, {});
        }
        return *this;
    }
    Activity(const Activity&) = delete;
    Activity& operator=(const Activity&) = delete;
    ~Activity() { reset(); }

    explicit operator bool() const noexcept { return static_cast<bool>(handle_); }
    bool done() const noexcept { return !handle_ || handle_.done(); }
    std::coroutine_handle<> handle() const noexcept { return handle_; }

    void rethrow_if_failed() const {
        if (handle_ && handle_.promise().error) {
            std::rethrow_exception(handle_.promise().error);
        }
    }

    void reset() noexcept {
        if (handle_) {
            handle_.destroy();
            handle_ = {};
        }
    }

private:
    std::coroutine_handle<promise_type> handle_;
};

namespace detail {

template <typename T>
struct CoResult {
    std::optional<T> value;
    template <typename U>
    void return_value(U&& v) {
        value.emplace(std::forward<U>(v));
    }
    T take() { return std::move(*value); }
};

template <>
struct CoResult<void> {
    void return_void() noexcept {}
    void take() noexcept {}
};

}  // namespace detail

/// Nested subroutine awaited from an Activity (kernel services, BFM calls,
/// behaviour-program blocks). Starts lazily and returns to its caller by
/// symmetric transfer.
template <typename T = void>
class [[nodiscard]] Co {
public:
    struct promise_type : detail::CoResult<T> {
        std::coroutine_handle<> continuation;
        std::exception_ptr error;

        Co get_return_object() noexcept { return Co{std::coroutine_handle<promise_type>::from_promise(*this)}; }
        std::suspend_always initial_suspend() noexcept { return {}; }

        struct FinalAwaiter {
            bool await_ready() const noexcept { return false; }
            std::coroutine_handle<> await_suspend(std::coroutine_handle<promise_type> h) noexcept {
                auto next = h.promise().continuation;
                return next ? next : std::noop_coroutine();
            }
            void await_resume() const noexcept {}
        };
        FinalAwaiter final_suspend() noexcept { return {}; }
        void unhandled_exception() noexcept { error = std::current_exception(); }
    };

    Co(Co&& o) noexcept : handle_(std::exchange(o.handle_, {})) {}
    Co(const Co&) = delete;
    Co& operator=(const Co&) = delete;
    Co& operator=(Co&&) = delete;
    ~Co() {
        if (handle_) {
            handle_.destroy();
        }
    }

    bool await_ready() const noexcept { return false; }
    std::coroutine_handle<> await_suspend(std::coroutine_handle<> caller) noexcept {
        handle_.promise().continuation = caller;
        return handle_;
    }
    T await_resume() {
        auto& p = handle_.promise();
        if (p.error) {
            std::rethrow_exception(p.error);
        }
        return p.take();
    }

private:
    explicit Co(std::coroutine_handle<promise_type> h) noexcept : handle_(h) {}
    std::coroutine_handle<promise_type> handle_;
};

}  // namespace rtk::sim
