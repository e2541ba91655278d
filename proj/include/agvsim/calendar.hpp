#pragma once

// Future-event list ordered by (time, insertion sequence).

#include <cstdint>
#include <queue>
#include <stdexcept>
#include <vector>

namespace agvsim {

struct Event {
    double time = 0.0;
    std::uint64_t seq = 0;
    int kind = 0;
    int a = 0;
    long long b = 0;
};

class EventCalendar {
public:
    double now() const { return clock_; }
    bool empty() const { return heap_.empty(); }
    std::size_t size() const { return heap_.size(); }
    std::uint64_t processed() const { return processed_; }

    /// Throws std::logic_error when `time` lies in the past.
    void schedule(double time, int kind, int a = 0, long long b = 0) {
        if (time < clock_) throw std::logic_error("event scheduled in the past");
        heap_.push(Event{time, next_seq_++, kind, a, b});
    }

    double peek_time() const { return heap_.top().time; }

    /// Removes the earliest event and advances the clock to it.
    Event pop() {
        Event e = heap_.top();
        heap_.pop();
        clock_ = e.time;
        ++processed_;
        return e;
    }

private:
    struct Later {
        bool operator()(const Event& x, const Event& y) const {
            return x.time != y.time ? x.time > y.time : x.seq > y.seq;
        }
    };
    std::priority_queue<Event, std::vector<Event>, Later> heap_;
    double clock_ = 0.0;
    std::uint64_t next_seq_ = 0;
    std::uint64_t processed_ = 0;
};

}  // namespace agvsim
