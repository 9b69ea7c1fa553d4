//! Generators and brute-force reference implementations shared by the
//! property suites and the acceptance target.
#![allow(dead_code)]

pub mod audit_oracle;
pub mod libgen;
pub mod partition_oracle;
pub mod spgen;

use std::path::{Path, PathBuf};

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

/// Annotation strings quoted in the tag reference and its examples.
pub const QUOTED_ANNOTATIONS: &[&str] = &[
    "!Null(data)",
    "Allocated(data, len, T, any)",
    "Align(data, T)",
    "Init(data, T, len)",
    "Alias(self.ptr, 0)",
    "ValidNum(add(data, mul(sizeof(T), len)), (0, isize::MAX])",
    "Align(p, T)",
    "Size(T, s)",
    "!Padding(T)",
    "!Null(p)",
    "Allocated(p, T, len, A)",
    "InBound(p, T, len)",
    "!Overlap(dst, src, len, T)",
    "ValidNum(expr, vrange)",
    "ValidString(arange)",
    "ValidCStr(p, len)",
    "Init(p, T, len)",
    "Unwrap(x, T)",
    "Typed(p, T)",
    "Owning(p)",
    "Alias(p1, p2)",
    "Alive(p, l)",
    "Pinned(p, l)",
    "!Volatile(p, T, len)",
    "Pinned(p)",
    "!Volatile(p)",
    "Opened(fd)",
    "Trait(T, trait)",
    "!Reachable()",
    "Deref(p, T, len)",
    "Allocated(p, T, len, any)",
    "ValidPtr(p, T, len)",
    "Size(T, 0) || (Size(T, !0) && Deref(p, T, len))",
    "Ptr2Ref(p, T)",
    "Align(p, T) && Deref(p, T, 1) && Alias(p, 0)",
    "Layout(p, layout)",
    "ValidNum(rem(p, layout.align), 0) && Allocated(p, u8, layout.size, heap)",
    "!Init(dst, T, count)",
    "Size(T, num)",
    "Size(T, unknown)",
    "Trait(T, Unpin)",
    "!Trait(T, Unpin)",
];
