#pragma once

namespace faiv {

/// Process-wide allocator tuning for frame-sized buffers. With glibc the
/// default mmap threshold hands every large buffer back to the kernel on
/// free, so each frame pays page faults for fresh zero pages; raising the
/// thresholds keeps those buffers on the heap. No-op elsewhere. Call once at
/// startup, before any allocation-heavy work.
void configureAllocator();

} // namespace faiv
