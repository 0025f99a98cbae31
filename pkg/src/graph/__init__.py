# Coexistence Lab - Graph Package
