use gaugebc::mesh::{annulus_gluing_map, collar_gluing_map, gen_tetra_sphere, GluingMap};
use gaugebc::{boundary_complex, collar, gen_annulus, gen_circle, gen_disk, glue, load_mesh, DecOperators, Error};

#[test]
fn json_round_trip_preserves_complex() {
    for m in [gen_disk(16).unwrap(), gen_annulus(16, 1.0, 2.0).unwrap(), gen_circle(16).unwrap()] {
        let text = m.to_json();
        let back = load_mesh(text.as_bytes()).unwrap();
        assert_eq!(back.id(), m.id());
        for k in 0..=m.dim() {
            assert_eq!(back.simplices(k), m.simplices(k));
        }
        for i in 0..m.count(m.dim()) {
            assert_eq!(back.sign(m.dim(), i), m.sign(m.dim(), i));
        }
        assert_eq!(back.boundary_components(), m.boundary_components());
        assert_eq!(back.to_json(), text);
    }
}

#[test]
fn generator_counts() {
    let d = gen_disk(16).unwrap();
    assert_eq!((d.count(0), d.count(1), d.count(2)), (33, 80, 48));
    assert_eq!(d.euler_characteristic(), 1);
    let a = gen_annulus(16, 1.0, 2.0).unwrap();
    assert_eq!((a.count(0), a.count(1), a.count(2)), (80, 208, 128));
    assert_eq!(a.boundary_components().len(), 2);
    let c = gen_circle(16).unwrap();
    assert!(c.is_closed());
    assert_eq!((c.count(0), c.count(1)), (16, 16));
}

#[test]
fn dangling_edge_is_non_manifold() {
    let text = r#"{"dim": 2, "vertices": [[0,0],[1,0],[0,1],[1,1],[2,2]],
        "cells": [[0,1,2],[1,3,2],[3,4]]}"#;
    assert!(matches!(load_mesh(text.as_bytes()), Err(Error::NonManifold(_))));
}

#[test]
fn three_triangles_on_one_edge_is_non_manifold() {
    let text = r#"{"dim": 2, "vertices": [[0,0],[1,0],[0,1],[0,-1],[1,1]],
        "cells": [[0,1,2],[1,0,3],[0,1,4]]}"#;
    assert!(matches!(load_mesh(text.as_bytes()), Err(Error::NonManifold(_))));
}

#[test]
fn inconsistent_orientation_rejected() {
    let text = r#"{"dim": 2, "vertices": [[0,0],[1,0],[0,1],[1,1]], "cells": [[0,1,2],[1,2,3]]}"#;
    assert!(matches!(load_mesh(text.as_bytes()), Err(Error::Orientation(_))));
}

#[test]
fn degenerate_and_empty_rejected() {
    let flat = r#"{"dim": 2, "vertices": [[0,0],[1,0],[2,0]], "cells": [[0,1,2]]}"#;
    assert!(matches!(load_mesh(flat.as_bytes()), Err(Error::Degenerate { .. })));
    let empty = r#"{"dim": 2, "vertices": [], "cells": []}"#;
    assert!(load_mesh(empty.as_bytes()).is_err());
    assert!(matches!(load_mesh(b"not json"), Err(Error::Parse(_))));
}

#[test]
fn collar_requires_closed_base() {
    let d = gen_disk(16).unwrap();
    assert!(matches!(collar(&d, 2, 1.0), Err(Error::NotClosed(_))));
    let c = gen_circle(16).unwrap();
    assert!(collar(&c, 0, 1.0).is_err());
    assert!(collar(&c, 2, -1.0).is_err());
}

#[test]
fn collar_over_tetra_sphere_is_a_3d_shell() {
    let s = gen_tetra_sphere().unwrap();
    assert!(s.is_closed());
    let c = collar(&s, 2, 0.5).unwrap();
    assert_eq!(c.dim(), 3);
    assert_eq!(c.boundary_components().len(), 2);
    let ops = DecOperators::build(&c).unwrap();
    for k in 0..2 {
        assert_eq!(ops.dd_defect(k), 0);
        assert_eq!(ops.trace_commutation_defect(k).unwrap(), 0);
    }
    let b = boundary_complex(&c).unwrap();
    assert_eq!(b.complex.unwrap().count(2), 8);
}

#[test]
fn gluing_annulus_gives_closed_torus() {
    let a = gen_annulus(16, 1.0, 2.0).unwrap();
    let t = glue(&a, &annulus_gluing_map(&a).unwrap()).unwrap();
    assert!(t.is_closed());
    assert_eq!(t.euler_characteristic(), 0);
    let c = collar(&gen_circle(16).unwrap(), 4, 1.0).unwrap();
    let t2 = glue(&c, &collar_gluing_map(&c).unwrap()).unwrap();
    assert!(t2.is_closed());
    assert_eq!(t2.euler_characteristic(), 0);
}

#[test]
fn gluing_rejects_bad_maps() {
    let a = gen_annulus(16, 1.0, 2.0).unwrap();
    let good = annulus_gluing_map(&a).unwrap();
    let same = GluingMap { target_component: good.source_component.clone(), ..good.clone() };
    assert!(matches!(glue(&a, &same), Err(Error::Glue(_))));
    let missing = GluingMap { source_component: "nope".into(), ..good.clone() };
    assert!(matches!(glue(&a, &missing), Err(Error::Glue(_))));
    let mut short = good.clone();
    short.vertex_bijection.pop();
    assert!(matches!(glue(&a, &short), Err(Error::Glue(_))));
    // a reflection of the circle preserves, rather than reverses, orientation
    let mut flipped = good.clone();
    let targets: Vec<usize> = good.vertex_bijection.iter().map(|p| p.1).collect();
    let n = targets.len();
    for (i, p) in flipped.vertex_bijection.iter_mut().enumerate() {
        p.1 = targets[(n - i) % n];
    }
    assert!(matches!(glue(&a, &flipped), Err(Error::Glue(_))));
}
