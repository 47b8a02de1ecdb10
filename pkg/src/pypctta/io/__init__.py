from pypctta.io.labels import read_labels, write_labels
from pypctta.io.manifest import (
    DatasetManifest,
    ManifestEntry,
    read_manifest,
    write_manifest,
)
from pypctta.io.mesh import fan_triangulate, mesh_format, read_mesh, write_mesh
from pypctta.io.point_cloud import cloud_format, read_point_cloud, write_point_cloud

__all__ = [
    "DatasetManifest",
    "ManifestEntry",
    "cloud_format",
    "fan_triangulate",
    "mesh_format",
    "read_labels",
    "read_manifest",
    "read_mesh",
    "read_point_cloud",
    "write_labels",
    "write_manifest",
    "write_mesh",
    "write_point_cloud",
]
