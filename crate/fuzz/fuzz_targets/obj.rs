#![no_main]

use hairfield::mesh_io::{encode_mesh, parse_obj, MeshFormat};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok((mesh, _)) = parse_obj(data) {
        let mut buf = Vec::new();
        encode_mesh(&mesh, MeshFormat::Obj, &mut buf).unwrap();
        let again = parse_obj(&buf).unwrap().0;
        assert_eq!(again.vertices(), mesh.vertices());
        assert_eq!(again.faces(), mesh.faces());
        assert_eq!(again.colors(), mesh.colors());
    }
});
