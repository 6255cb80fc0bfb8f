#include "insitu/dtl.hpp"

#include "insitu/errors.hpp"

#include <fmt/format.h>

#include <algorithm>

namespace insitu {

std::string_view to_string(QueueMode mode)
{
  return mode == QueueMode::instantaneous ? "instantaneous" : "mailbox";
}

QueueMode parse_queue_mode(std::string_view text)
{
  if (text == "instantaneous" || text == "queue")
    return QueueMode::instantaneous;
  if (text == "mailbox")
    return QueueMode::mailbox;
  throw ParseError(fmt::format("unknown DTL mode '{}' (expected instantaneous or mailbox)", text));
}

Message Message::data(const Actor& producer, double bytes, std::int64_t tag)
{
  Message m;
  m.payload_size  = bytes;
  m.tag           = tag;
  m.producer      = producer.id();
  m.producer_node = producer.node();
  return m;
}

Message Message::poison(const Actor& producer)
{
  return data(producer, 0, kPoisonTag);
}

MessageQueue::MessageQueue(Simulation& sim, std::string name, QueueMode mode, QueueOptions options)
    : sim_(sim), name_(std::move(name)), mode_(mode), options_(options)
{
  if (options_.capacity && *options_.capacity == 0)
    throw std::invalid_argument(fmt::format("queue '{}': capacity must be positive", name_));
}

void MessageQueue::check_open() const
{
  if (closed_)
    throw QueueClosed(fmt::format("queue '{}' is closed", name_));
}

void MessageQueue::close()
{
  closed_ = true;
  sim_.notify(room_);
}

Task<> MessageQueue::wait_for_room(Actor& self)
{
  if (full())
    co_await sim_.wait_until(self, room_, [this] { return !full() || closed_; },
                             fmt::format("room in queue '{}'", name_));
}

Task<AsyncHandle> MessageQueue::enqueue(Actor& self, Message m)
{
  check_open();
  if (m.payload_size < 0)
    throw std::invalid_argument("message payload size must be non-negative");
  if (m.is_poison())
    m.payload_size = 0;
  co_await wait_for_room(self);
  check_open();

  m.put_time = sim_.now();
  ++puts_;
  Completion sent = sim_.make_completion();

  if (mode_ == QueueMode::instantaneous) {
    sim_.complete(sent);
    if (!consumers_.empty()) {
      Waiting* w = consumers_.front();
      consumers_.erase(consumers_.begin());
      m.matched_time = m.delivered_time = sim_.now();
      w->delivered = m;
      sim_.wake(*w->consumer);
    } else {
      pending_.push_back(Stored{m, sent});
    }
  } else if (!consumers_.empty()) {
    Waiting* w = consumers_.front();
    consumers_.erase(consumers_.begin());
    match(m, *w, sent);
  } else {
    pending_.push_back(Stored{m, sent});
  }
  co_return AsyncHandle(sent);
}

Task<> MessageQueue::put(Actor& self, Message m)
{
  AsyncHandle h = co_await enqueue(self, std::move(m));
  if (!h.completed())
    co_await sim_.wait(self, h.completion());
}

Task<AsyncHandle> MessageQueue::put_async(Actor& self, Message m)
{
  co_return co_await enqueue(self, std::move(m));
}

void MessageQueue::match(Message m, Waiting& w, Completion sent)
{
  m.matched_time = sim_.now();
  const NodeId dst = w.consumer->node();
  if (options_.trace_transfers && sim_.tracing()) {
    std::string route;
    for (LinkId l : sim_.platform().route(m.producer_node, dst)) {
      if (!route.empty())
        route += '+';
      route += sim_.platform().link(l).name;
    }
    sim_.trace(*w.consumer, StageLabel::other,
               fmt::format("xfer queue={} tag={} bytes={} src={} dst={} route={}", name_, m.tag, m.payload_size,
                           sim_.platform().node(m.producer_node).name, sim_.platform().node(dst).name, route));
  }
  Waiting* wp = &w;
  sim_.start_comm(m.producer_node, dst, m.payload_size, [this, wp, m, sent](SimTime t) mutable {
    m.delivered_time = t;
    wp->delivered    = m;
    sim_.wake(*wp->consumer);
    sim_.complete(sent);
  });
}

Task<Message> MessageQueue::get(Actor& self)
{
  check_open();
  Waiting w{&self, sim_.now(), std::nullopt};

  if (!pending_.empty()) {
    Stored s = std::move(pending_.front());
    pending_.pop_front();
    sim_.notify(room_);
    if (mode_ == QueueMode::instantaneous) {
      s.message.matched_time = s.message.delivered_time = sim_.now();
      ++gets_;
      co_return s.message;
    }
    match(s.message, w, s.sent);
  } else {
    auto pos = std::upper_bound(consumers_.begin(), consumers_.end(), &w, [](const Waiting* a, const Waiting* b) {
      return a->since != b->since ? a->since < b->since : a->consumer->id() < b->consumer->id();
    });
    consumers_.insert(pos, &w);
  }

  while (!w.delivered)
    co_await sim_.park(self, fmt::format("get on queue '{}'", name_));
  ++gets_;
  co_return *w.delivered;
}

MessageQueue& Dtl::create_queue(const std::string& name, QueueMode mode, QueueOptions options)
{
  if (queues_.count(name))
    throw DuplicateName(fmt::format("a queue named '{}' already exists", name));
  auto q   = std::make_unique<MessageQueue>(sim_, name, mode, options);
  auto& rf = *q;
  queues_.emplace(name, std::move(q));
  return rf;
}

MessageQueue& Dtl::queue(const std::string& name)
{
  auto it = queues_.find(name);
  if (it == queues_.end())
    throw std::out_of_range(fmt::format("no queue named '{}'", name));
  return *it->second;
}

void Dtl::close_all()
{
  for (auto& [_, q] : queues_)
    q->close();
}

std::uint64_t Dtl::total_puts() const
{
  std::uint64_t n = 0;
  for (const auto& [_, q] : queues_)
    n += q->puts();
  return n;
}

std::uint64_t Dtl::total_gets() const
{
  std::uint64_t n = 0;
  for (const auto& [_, q] : queues_)
    n += q->gets();
  return n;
}

std::vector<const MessageQueue*> Dtl::queues() const
{
  std::vector<const MessageQueue*> out;
  for (const auto& [_, q] : queues_)
    out.push_back(q.get());
  return out;
}

} // namespace insitu
