#![no_main]

use knnavg::problems::{true_front, ZdtVariant};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(variant) = text.parse::<ZdtVariant>() {
        assert_eq!(variant.as_str().parse::<ZdtVariant>().ok(), Some(variant));
        let front = true_front(variant, 2 + data.len() % 64).expect("front");
        front.to_csv().expect("front csv");
    }
});
