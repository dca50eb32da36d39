//! JSON mesh format:
//! `{ "vertices": [[x,y],...], "elements": [[i0,i1,...],...],
//!    "boundary": [{"edge":[i,j],"tag":"D"|"N"|"inner"|"outer"}] }`
//! with 0-based indices. Saving and re-loading reproduces vertex coordinates
//! bit-exactly and connectivity identically.

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};
use std::path::Path;

use super::{BoundaryTag, PolygonalMesh};
use crate::error::{Error, Result};

#[derive(Serialize, Deserialize)]
struct MeshFile {
    vertices: Vec<[f64; 2]>,
    elements: Vec<Vec<usize>>,
    boundary: Vec<BoundaryEntry>,
}

#[derive(Serialize, Deserialize)]
struct BoundaryEntry {
    edge: [usize; 2],
    tag: BoundaryTag,
}

pub fn save_mesh(mesh: &PolygonalMesh, path: impl AsRef<Path>) -> Result<()> {
    let file = MeshFile {
        vertices: mesh.vertices().iter().map(|v| [v.x, v.y]).collect(),
        elements: (0..mesh.n_elements())
            .map(|e| mesh.element_vertices(e).to_vec())
            .collect(),
        boundary: mesh
            .boundary_edges()
            .map(|(e, tag)| BoundaryEntry {
                edge: mesh.edge(e).vertices,
                tag,
            })
            .collect(),
    };
    let text = serde_json::to_string_pretty(&file)?;
    std::fs::write(path, text)?;
    Ok(())
}

pub fn load_mesh(path: impl AsRef<Path>) -> Result<PolygonalMesh> {
    let text = std::fs::read_to_string(&path)
        .map_err(|e| Error::MeshFormat(format!("{}: {e}", path.as_ref().display())))?;
    let file: MeshFile = serde_json::from_str(&text)
        .map_err(|e| Error::MeshFormat(format!("malformed mesh file: {e}")))?;
    let vertices = file
        .vertices
        .iter()
        .map(|&[x, y]| Vector2::new(x, y))
        .collect();
    let tags: Vec<([usize; 2], BoundaryTag)> =
        file.boundary.iter().map(|b| (b.edge, b.tag)).collect();
    PolygonalMesh::build(vertices, file.elements, &tags)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_square_mesh, BoundaryPartition, Rect};

    #[test]
    fn round_trip_is_exact() {
        let mesh =
            generate_square_mesh(2, Rect::unit(), &BoundaryPartition::left_bottom(Rect::unit()))
                .unwrap();
        let dir = std::env::temp_dir().join("vem_sad_mesh_roundtrip.json");
        save_mesh(&mesh, &dir).unwrap();
        let loaded = load_mesh(&dir).unwrap();
        assert_eq!(mesh.n_vertices(), loaded.n_vertices());
        assert_eq!(mesh.n_edges(), loaded.n_edges());
        for (a, b) in mesh.vertices().iter().zip(loaded.vertices()) {
            assert_eq!(a.x.to_bits(), b.x.to_bits());
            assert_eq!(a.y.to_bits(), b.y.to_bits());
        }
        for e in 0..mesh.n_elements() {
            assert_eq!(mesh.element_vertices(e), loaded.element_vertices(e));
        }
        let tags_a: Vec<_> = mesh.boundary_edges().collect();
        let tags_b: Vec<_> = loaded.boundary_edges().collect();
        assert_eq!(tags_a, tags_b);
        std::fs::remove_file(dir).ok();
    }

    #[test]
    fn save_is_deterministic() {
        let mesh = generate_square_mesh(3, Rect::unit(), &BoundaryPartition::all_dirichlet())
            .unwrap();
        let p1 = std::env::temp_dir().join("vem_sad_det_a.json");
        let p2 = std::env::temp_dir().join("vem_sad_det_b.json");
        save_mesh(&mesh, &p1).unwrap();
        save_mesh(&mesh, &p2).unwrap();
        assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
        std::fs::remove_file(p1).ok();
        std::fs::remove_file(p2).ok();
    }

    #[test]
    fn malformed_file_is_reported() {
        let p = std::env::temp_dir().join("vem_sad_bad.json");
        std::fs::write(&p, "{ not json").unwrap();
        let err = load_mesh(&p).unwrap_err();
        assert!(matches!(err, Error::MeshFormat(_)));
        std::fs::remove_file(p).ok();
    }
}
