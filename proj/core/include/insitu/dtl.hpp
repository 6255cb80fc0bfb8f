#pragma once

#include "insitu/engine.hpp"

#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace insitu {

/// instantaneous: a plain producer-consumer queue; exchanges never advance the clock but respect flow dependencies.
/// mailbox: a rendezvous point; once a sender and a receiver meet, the payload travels from the producer's node to the
/// consumer's node (through the loopback when both are on the same node).
enum class QueueMode { instantaneous, mailbox };

std::string_view to_string(QueueMode mode);
QueueMode parse_queue_mode(std::string_view text); // throws ParseError

inline constexpr std::int64_t kPoisonTag = -1;

struct Message {
  double payload_size = 0; // bytes
  std::int64_t tag    = 0; // step index, or kPoisonTag
  ActorId producer    = 0;
  NodeId producer_node = 0;

  // Filled in by the queue.
  SimTime put_time       = 0;
  SimTime matched_time   = 0; // when a consumer was paired with this message
  SimTime delivered_time = 0; // when the consumer got it

  bool is_poison() const { return tag == kPoisonTag; }

  static Message data(const Actor& producer, double bytes, std::int64_t tag);
  static Message poison(const Actor& producer);
};

/// Handle returned by asynchronous puts. Completes once the payload is considered sent.
class AsyncHandle {
public:
  AsyncHandle() = default;
  explicit AsyncHandle(Completion c) : completion_(std::move(c)) {}
  std::uint64_t id() const { return completion_.id(); }
  bool completed() const { return completion_.done(); }
  SimTime completion_time() const { return completion_.time(); }
  const Completion& completion() const { return completion_; }

private:
  Completion completion_;
};

struct QueueOptions {
  /// Unbounded when empty. Bounded queues make producers block while full.
  std::optional<std::size_t> capacity;
  /// Record one trace event per mailbox transfer (route included).
  bool trace_transfers = true;
};

class MessageQueue {
public:
  MessageQueue(Simulation& sim, std::string name, QueueMode mode, QueueOptions options);
  MessageQueue(const MessageQueue&)            = delete;
  MessageQueue& operator=(const MessageQueue&) = delete;

  const std::string& name() const { return name_; }
  QueueMode mode() const { return mode_; }
  std::optional<std::size_t> capacity() const { return options_.capacity; }
  /// Messages stored and not yet matched with a consumer.
  std::size_t pending() const { return pending_.size(); }
  std::size_t waiting_consumers() const { return consumers_.size(); }
  bool closed() const { return closed_; }

  /// Synchronous put: returns once the message is handed over (instantaneous) or transferred (mailbox).
  Task<> put(Actor& self, Message m);
  /// Asynchronous put: only blocks while the queue is full; the handle completes when the payload is sent.
  Task<AsyncHandle> put_async(Actor& self, Message m);
  /// Blocks until a message is matched (FIFO) and, in mailbox mode, transferred.
  Task<Message> get(Actor& self);

  void close();

  std::uint64_t puts() const { return puts_; }
  std::uint64_t gets() const { return gets_; }

private:
  struct Waiting {
    Actor* consumer = nullptr;
    SimTime since   = 0;
    std::optional<Message> delivered;
  };
  struct Stored {
    Message message;
    Completion sent;
  };

  Task<> wait_for_room(Actor& self);
  Task<AsyncHandle> enqueue(Actor& self, Message m);
  void match(Message m, Waiting& w, Completion sent);
  void check_open() const;
  bool full() const { return options_.capacity && pending_.size() >= *options_.capacity; }

  Simulation& sim_;
  std::string name_;
  QueueMode mode_;
  QueueOptions options_;
  std::deque<Stored> pending_;
  std::vector<Waiting*> consumers_; // ordered by (since, actor id)
  Signal room_;
  bool closed_ = false;
  std::uint64_t puts_ = 0;
  std::uint64_t gets_ = 0;
};

/// Registry of the queues of one simulation instance.
class Dtl {
public:
  explicit Dtl(Simulation& sim) : sim_(sim) {}

  MessageQueue& create_queue(const std::string& name, QueueMode mode, QueueOptions options = {});
  MessageQueue& queue(const std::string& name);
  bool has_queue(const std::string& name) const { return queues_.count(name) != 0; }

  /// Marks every queue closed; later puts/gets throw QueueClosed.
  void close_all();
  std::uint64_t total_puts() const;
  std::uint64_t total_gets() const;
  std::vector<const MessageQueue*> queues() const;

private:
  Simulation& sim_;
  std::map<std::string, std::unique_ptr<MessageQueue>, std::less<>> queues_;
};

} // namespace insitu
