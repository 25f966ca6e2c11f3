import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy

import utils


def save_heatmap(path, values, mask, extent, title, cmap="viridis"):
    """Write an n × n field as a PNG raster; points outside `mask` are blank."""

    utils.create_folders_if_necessary(path)
    values = numpy.ma.masked_where(~numpy.asarray(mask), numpy.asarray(values))
    fig, ax = plt.subplots(figsize=(5, 4))
    im = ax.imshow(values, origin="lower", extent=extent, cmap=cmap)
    fig.colorbar(im, ax=ax)
    ax.set_title(title)
    ax.set_xlabel("$x_1$")
    ax.set_ylabel("$x_2$")
    fig.tight_layout()
    fig.savefig(path, dpi=100)
    plt.close(fig)
