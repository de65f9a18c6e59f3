# Viewer pages of the result bundle viewer
