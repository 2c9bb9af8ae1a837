def broken(:
    this is not python
