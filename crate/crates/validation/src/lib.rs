//! Home of the `acceptance` test target, which checks the library's
//! numerical guarantees end to end and prints one PASS/FAIL line per
//! criterion:
//!
//! ```text
//! cargo test -p qnoise-validation --test acceptance -- --nocapture --test-threads 1
//! ```
