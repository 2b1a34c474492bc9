//! Trilinear shape functions for the 8-node hexahedron on [-1,1]^3, with a
//! fixed 2x2x2 Gauss rule. Node order matches `StructuredGrid::cell_nodes`.

/// Reference coordinates of the 8 nodes.
pub const NODE_XI: [[f64; 3]; 8] = [
    [-1.0, -1.0, -1.0],
    [1.0, -1.0, -1.0],
    [1.0, 1.0, -1.0],
    [-1.0, 1.0, -1.0],
    [-1.0, -1.0, 1.0],
    [1.0, -1.0, 1.0],
    [1.0, 1.0, 1.0],
    [-1.0, 1.0, 1.0],
];

/// 2x2x2 Gauss points (weight 1 each on the reference cube).
pub fn gauss_points() -> [[f64; 3]; 8] {
    let g = 1.0 / 3.0_f64.sqrt();
    let mut pts = [[0.0; 3]; 8];
    for (m, p) in pts.iter_mut().enumerate() {
        *p = [
            if m & 1 == 0 { -g } else { g },
            if (m >> 1) & 1 == 0 { -g } else { g },
            if (m >> 2) & 1 == 0 { -g } else { g },
        ];
    }
    pts
}

/// Shape function values at a reference point.
pub fn shape_values(xi: &[f64; 3]) -> [f64; 8] {
    let mut n = [0.0; 8];
    for a in 0..8 {
        n[a] = 0.125
            * (1.0 + NODE_XI[a][0] * xi[0])
            * (1.0 + NODE_XI[a][1] * xi[1])
            * (1.0 + NODE_XI[a][2] * xi[2]);
    }
    n
}

/// Reference-coordinate gradients dN/dxi at a reference point.
pub fn shape_ref_gradients(xi: &[f64; 3]) -> [[f64; 3]; 8] {
    let mut g = [[0.0; 3]; 8];
    for a in 0..8 {
        let sx = NODE_XI[a][0];
        let sy = NODE_XI[a][1];
        let sz = NODE_XI[a][2];
        g[a] = [
            0.125 * sx * (1.0 + sy * xi[1]) * (1.0 + sz * xi[2]),
            0.125 * sy * (1.0 + sx * xi[0]) * (1.0 + sz * xi[2]),
            0.125 * sz * (1.0 + sx * xi[0]) * (1.0 + sy * xi[1]),
        ];
    }
    g
}
