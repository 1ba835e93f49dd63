#pragma once

#include "rtk/kernel/er.hpp"
#include "rtk/kernel/objects.hpp"
#include "rtk/kernel/timer_queue.hpp"
#include "rtk/sim/engine.hpp"

#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace rtk::kernel {

using sim::Activity;
using sim::BodyFactory;
using sim::Co;
using sim::Energy;
using sim::Priority;
using Timeout = std::optional<Tick>;  // nullopt waits forever

inline constexpr ThreadId kInitThreadId = std::numeric_limits<ThreadId>::max();
inline constexpr Timeout kForever = std::nullopt;

struct KernelConfig {
    ThreadId init_id = kInitThreadId;
    ThreadId idle_id = 0;  // 0: no idle thread
    std::string idle_name = "IDLE";
    Energy idle_energy_per_tick;
    Tick svc_etm = 1;
    Energy svc_eem;
    std::map<std::string, sim::Annotation, std::less<>> svc_overrides;
    std::uint32_t irq_lines = 8;
};

struct TaskSpec {
    ThreadId id = 0;
    std::string name;
    Priority priority = sim::kLowestPriority;
    std::uint32_t exinf = 0;
    BodyFactory body;
};

struct HandlerSpec {
    ThreadId id = 0;
    std::string name;
    BodyFactory body;
};

/// Names of the service calls that can be charged and overridden.
const std::vector<std::string>& service_names();

class Kernel {
public:
    explicit Kernel(sim::Engine& engine, KernelConfig config = {});
    Kernel(const Kernel&) = delete;
    Kernel& operator=(const Kernel&) = delete;

    sim::Engine& engine() noexcept { return engine_; }
    const sim::Engine& engine() const noexcept { return engine_; }
    const KernelConfig& config() const noexcept { return config_; }

    /// Creates the idle and initialization threads, runs `user_main` inside the
    /// initialization task at the current instant, then retires it.
    void boot(const std::function<void(Kernel&)>& user_main);
    bool booted() const noexcept { return booted_; }

    // --- object creation (synchronous; throws SimError on bad configuration)
    void cre_tsk(TaskSpec spec);
    /// Cyclic handler firing at phase, phase + period, ... (phase defaults to period).
    void cre_cyc(HandlerSpec spec, Tick period, std::optional<Tick> phase = std::nullopt);
    /// One-shot alarm firing `offset` ticks after creation.
    void cre_alm(HandlerSpec spec, Tick offset);
    void def_int(HandlerSpec spec, std::uint32_t line);
    void cre_sem(ID id, int initial, int max_count, std::uint32_t exinf = 0);
    void cre_flg(ID id, std::uint32_t initial, std::uint32_t exinf = 0);
    void cre_mbx(ID id, std::uint32_t exinf = 0);
    void cre_mbf(ID id, std::size_t capacity, std::size_t max_message, std::uint32_t exinf = 0);
    void cre_mtx(ID id, std::uint32_t exinf = 0);
    void cre_mpf(ID id, std::size_t block_size, std::size_t block_count, std::uint32_t exinf = 0);
    void cre_mpl(ID id, std::size_t total, std::uint32_t exinf = 0);

    /// Start a task without charging a service call (boot-time autostart).
    void start_task(ThreadId id);

    // --- time and interrupts
    /// Processes every timer event due at the engine's current instant.
    std::vector<TimerEvent> timer_tick();
    void raise_irq(std::uint32_t line);
    std::optional<ThreadId> irq_handler(std::uint32_t line) const;

    // --- task services
    Co<ER> sta_tsk(ThreadId self, ThreadId target);
    Co<ER> ext_tsk(ThreadId self);
    Co<ER> ter_tsk(ThreadId self, ThreadId target);
    Co<ER> slp_tsk(ThreadId self, Timeout tmout = kForever);
    Co<ER> wup_tsk(ThreadId self, ThreadId target);
    Co<ER> dly_tsk(ThreadId self, Tick ticks);

    // --- synchronization and communication
    Co<ER> sig_sem(ThreadId self, ID id, int count = 1);
    Co<ER> wai_sem(ThreadId self, ID id, int count = 1, Timeout tmout = kForever);
    Co<ER> set_flg(ThreadId self, ID id, std::uint32_t pattern);
    Co<ER> clr_flg(ThreadId self, ID id, std::uint32_t pattern);
    Co<ER> wai_flg(ThreadId self, ID id, std::uint32_t pattern, FlagMode mode, bool clear, Timeout tmout = kForever,
                   std::uint32_t* out = nullptr);
    Co<ER> snd_mbx(ThreadId self, ID id, Message message);
    Co<ER> rcv_mbx(ThreadId self, ID id, Timeout tmout = kForever, Message* out = nullptr);
    Co<ER> snd_mbf(ThreadId self, ID id, std::string bytes, Timeout tmout = kForever);
    Co<ER> rcv_mbf(ThreadId self, ID id, Timeout tmout = kForever, std::string* out = nullptr);
    Co<ER> loc_mtx(ThreadId self, ID id, Timeout tmout = kForever);
    Co<ER> unl_mtx(ThreadId self, ID id);
    Co<ER> get_mpf(ThreadId self, ID id, Timeout tmout = kForever, std::size_t* block = nullptr);
    Co<ER> rel_mpf(ThreadId self, ID id, std::size_t block);
    Co<ER> get_mpl(ThreadId self, ID id, std::size_t size, Timeout tmout = kForever, std::size_t* offset = nullptr);
    Co<ER> rel_mpl(ThreadId self, ID id, std::size_t offset);
    Co<ER> del_obj(ThreadId self, ObjectClass cls, ID id);

    /// Annotation charged for one call of `service` (label = service name).
    sim::Annotation svc_annotation(std::string_view service) const;

    // --- inspection
    const TaskControlBlock& tcb(ThreadId id) const;
    bool is_task(ThreadId id) const { return tcbs_.contains(id); }
    const std::map<ThreadId, TaskControlBlock>& tasks() const noexcept { return tcbs_; }
    const std::map<ThreadId, HandlerControl>& handlers() const noexcept { return handlers_; }
    const std::map<ID, Semaphore>& semaphores() const noexcept { return sems_; }
    const std::map<ID, EventFlag>& event_flags() const noexcept { return flags_; }
    const std::map<ID, Mailbox>& mailboxes() const noexcept { return mbxs_; }
    const std::map<ID, MessageBuffer>& message_buffers() const noexcept { return mbfs_; }
    const std::map<ID, Mutex>& mutexes() const noexcept { return mtxs_; }
    const std::map<ID, FixedPool>& fixed_pools() const noexcept { return mpfs_; }
    const std::map<ID, VariablePool>& variable_pools() const noexcept { return mpls_; }
    const TimerQueue& timers() const noexcept { return timers_; }
    /// Wait queue of an object in release order.
    std::vector<ThreadId> waiters(ObjectClass cls, ID id) const;
    /// Ticks a task spent in service-call context.
    Tick sys_run_time(ThreadId id) const;
    /// Remaining execution ticks (cet minus service-call ticks).
    Tick user_run_time(ThreadId id) const;

private:
    struct Outcome {
        ER er = E_OK;
        bool block = false;
    };

    template <typename Effect>
    Co<ER> service(ThreadId self, std::string_view name, Effect effect);

    TaskControlBlock& tcb_mut(ThreadId id);
    Priority prio(ThreadId id) const { return engine_.thread(id).current_priority; }
    auto prio_fn() const {
        return [this](ThreadId id) { return prio(id); };
    }
    bool caller_is_handler(ThreadId self) const;
    void register_handler(HandlerSpec spec, sim::ThreadKind kind);
    void check_new_object(bool exists, ObjectClass cls, ID id) const;

    Outcome block(ThreadId self, WaitInfo info, Timeout tmout);
    void release(TaskControlBlock& t, ER er);
    void detach_from_object(TaskControlBlock& t);
    void on_task_exit(ThreadId id);
    void on_task_stop(ThreadId id);

    // effects
    Outcome do_sta_tsk(ThreadId self, ThreadId target);
    Outcome do_ter_tsk(ThreadId self, ThreadId target);
    Outcome do_slp_tsk(ThreadId self, Timeout tmout);
    Outcome do_wup_tsk(ThreadId self, ThreadId target);
    Outcome do_dly_tsk(ThreadId self, Tick ticks);
    Outcome do_sig_sem(ThreadId self, ID id, int count);
    Outcome do_wai_sem(ThreadId self, ID id, int count, Timeout tmout);
    Outcome do_set_flg(ID id, std::uint32_t pattern);
    Outcome do_clr_flg(ID id, std::uint32_t pattern);
    Outcome do_wai_flg(ThreadId self, ID id, std::uint32_t pattern, FlagMode mode, bool clear, Timeout tmout);
    Outcome do_snd_mbx(ID id, Message message);
    Outcome do_rcv_mbx(ThreadId self, ID id, Timeout tmout);
    Outcome do_snd_mbf(ThreadId self, ID id, std::string bytes, Timeout tmout);
    Outcome do_rcv_mbf(ThreadId self, ID id, Timeout tmout);
    Outcome do_loc_mtx(ThreadId self, ID id, Timeout tmout);
    Outcome do_unl_mtx(ThreadId self, ID id);
    Outcome do_get_mpf(ThreadId self, ID id, Timeout tmout);
    Outcome do_rel_mpf(ThreadId self, ID id, std::size_t block);
    Outcome do_get_mpl(ThreadId self, ID id, std::size_t size, Timeout tmout);
    Outcome do_rel_mpl(ThreadId self, ID id, std::size_t offset);
    Outcome do_del_obj(ObjectClass cls, ID id);

    void grant_semaphore(Semaphore& s);
    void admit_senders(MessageBuffer& b);
    void grant_variable_pool(VariablePool& p);
    std::optional<std::size_t> fit_variable(VariablePool& p, std::size_t size, ThreadId owner);
    void transfer_mutex(Mutex& m);
    void recompute_priority(ThreadId id);

    sim::Engine& engine_;
    KernelConfig config_;
    bool booted_ = false;
    TimerQueue timers_;
    std::map<ThreadId, TaskControlBlock> tcbs_;
    std::map<ThreadId, HandlerControl> handlers_;
    std::map<std::uint32_t, ThreadId> irq_bindings_;
    std::map<ID, Semaphore> sems_;
    std::map<ID, EventFlag> flags_;
    std::map<ID, Mailbox> mbxs_;
    std::map<ID, MessageBuffer> mbfs_;
    std::map<ID, Mutex> mtxs_;
    std::map<ID, FixedPool> mpfs_;
    std::map<ID, VariablePool> mpls_;
};

}  // namespace rtk::kernel
