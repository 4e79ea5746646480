#![no_main]

use libfuzzer_sys::fuzz_target;
use whittle_core::harness::read_run_csv_bytes;

fuzz_target!(|data: &[u8]| {
    let _ = read_run_csv_bytes(data);
});
