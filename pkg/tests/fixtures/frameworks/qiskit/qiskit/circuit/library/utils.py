def z_rotation_builder(angle):
    """Builds a layered rotation block around the z axis."""
    return angle
