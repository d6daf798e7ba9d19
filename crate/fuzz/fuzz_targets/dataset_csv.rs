#![no_main]

use causal_dep::stats::Dataset;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(d) = Dataset::from_csv(data) {
        let mut buf = Vec::new();
        d.write_csv(&mut buf).expect("writing to memory succeeds");
        assert_eq!(Dataset::from_csv(buf.as_slice()).expect("written data parses"), d);
    }
});
