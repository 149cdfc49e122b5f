#pragma once

#include "macsim/report.hpp"
#include "macsim/trace.hpp"

#include <set>

namespace macsim {

/// Fault-free / Byzantine roles as recorded by the INIT records.
std::set<NodeId> byzantine_set(const RunTrace& trace);
std::set<NodeId> fault_free_set(const RunTrace& trace);

/// Adds `ack_ordering`, `authentication` and `eventual_delivery` to `report`.
///
/// - ack_ordering: each ACK is strictly later than every fault-free delivery of its
///   broadcast, and every delivery is strictly later than its send.
/// - authentication: each delivery names the sender of its broadcast; broadcasts without a
///   payload come from Byzantine nodes, the rest from fault-free ones.
/// - eventual_delivery: in a halted and drained trace every fault-free broadcast reaches every
///   fault-free node exactly once and is ACKed.
void check_mac_semantics(const RunTrace& trace, CheckReport& report);

}  // namespace macsim
