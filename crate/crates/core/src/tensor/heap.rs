use std::sync::Once;

static TUNE: Once = Once::new();

/// Keeps freed activation buffers in the process heap instead of returning
/// them to the kernel. Tape workloads allocate and drop many multi-megabyte
/// buffers per step, and re-faulting those pages costs more than the
/// arithmetic on them.
pub(crate) fn retain_freed_buffers() {
    TUNE.call_once(|| {
        #[cfg(all(target_os = "linux", target_env = "gnu"))]
        // SAFETY: mallopt only adjusts glibc allocator thresholds and may be
        // called at any point.
        unsafe {
            libc::mallopt(libc::M_MMAP_THRESHOLD, 32 << 20);
            libc::mallopt(libc::M_TRIM_THRESHOLD, i32::MAX);
        }
    });
}
