#![no_main]

use libfuzzer_sys::fuzz_target;
use whittle_core::checkpoint::Checkpoint;

fuzz_target!(|data: &[u8]| {
    let _ = Checkpoint::decode(data);
});
