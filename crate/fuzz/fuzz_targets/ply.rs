#![no_main]

use hairfield::mesh_io::{encode_mesh, parse_ply, MeshFormat};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok((mesh, _)) = parse_ply(data) {
        for format in [MeshFormat::PlyAscii, MeshFormat::PlyBinary] {
            let mut buf = Vec::new();
            encode_mesh(&mesh, format, &mut buf).unwrap();
            assert_eq!(parse_ply(&buf).unwrap().0, mesh);
        }
    }
});
