#![no_main]
use libfuzzer_sys::fuzz_target;
use vdtp_core::Packet;

fuzz_target!(|data: &[u8]| {
    // the encoding is canonical: anything that decodes re-encodes to itself
    if let Ok(packet) = Packet::decode(data) {
        assert_eq!(packet.encoded_len(), data.len());
        assert_eq!(packet.encode().unwrap(), data);
    }
});
