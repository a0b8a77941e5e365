//! Approximate peak-memory accounting.
//!
//! The CLI installs [`TrackingAllocator`] as the global allocator, which
//! keeps an exact high-water mark of live heap bytes. Library users without
//! it fall back to the OS resident-set high-water mark, which is coarser
//! and process-wide.

use std::alloc::{GlobalAlloc, Layout, System};
use std::sync::atomic::{AtomicU64, Ordering};

static LIVE: AtomicU64 = AtomicU64::new(0);
static PEAK: AtomicU64 = AtomicU64::new(0);
static INSTALLED: AtomicU64 = AtomicU64::new(0);

/// Counting wrapper around the system allocator.
pub struct TrackingAllocator;

unsafe impl GlobalAlloc for TrackingAllocator {
    unsafe fn alloc(&self, layout: Layout) -> *mut u8 {
        INSTALLED.store(1, Ordering::Relaxed);
        let ptr = unsafe { System.alloc(layout) };
        if !ptr.is_null() {
            let live =
                LIVE.fetch_add(layout.size() as u64, Ordering::Relaxed) + layout.size() as u64;
            PEAK.fetch_max(live, Ordering::Relaxed);
        }
        ptr
    }

    unsafe fn dealloc(&self, ptr: *mut u8, layout: Layout) {
        LIVE.fetch_sub(layout.size() as u64, Ordering::Relaxed);
        unsafe { System.dealloc(ptr, layout) }
    }
}

/// Resets the high-water mark to the current live size (or the OS one via
/// `clear_refs` when the tracking allocator is absent). Best effort.
pub fn reset_peak() {
    if INSTALLED.load(Ordering::Relaxed) == 1 {
        PEAK.store(LIVE.load(Ordering::Relaxed), Ordering::Relaxed);
    } else {
        let _ = std::fs::write("/proc/self/clear_refs", b"5");
    }
}

/// Peak bytes since the last reset; approximate by design.
pub fn peak_bytes() -> u64 {
    if INSTALLED.load(Ordering::Relaxed) == 1 {
        return PEAK.load(Ordering::Relaxed);
    }
    rss_high_water().unwrap_or(0)
}

fn rss_high_water() -> Option<u64> {
    let status = std::fs::read_to_string("/proc/self/status").ok()?;
    for line in status.lines() {
        if let Some(rest) = line.strip_prefix("VmHWM:") {
            let kb: u64 = rest.trim().trim_end_matches("kB").trim().parse().ok()?;
            return Some(kb * 1024);
        }
    }
    None
}
