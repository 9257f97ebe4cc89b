package num;

/**
 * Small dense matrix.
 */
public class Matrix {
	private final double[][] a;
	private final int rows, cols;

	public Matrix(int rows, int cols) {
		this.rows = rows;
		this.cols = cols;
		this.a = new double[rows][cols];
	}

	public double get(int i, int j) { return a[i][j]; }

	public void set(int i, int j, double v) { a[i][j] = v; }

	/**
	 * Returns this * other.
	 */
	public Matrix times(Matrix other) {
		if (cols != other.rows) throw new IllegalArgumentException("shape");
		Matrix c = new Matrix(rows, other.cols);
		for (int i = 0; i < rows; i++) {
			for (int j = 0; j < other.cols; j++) {
				double s = 0;
				for (int k = 0; k < cols; k++) {
					s += a[i][k] * other.a[k][j];
				}
				c.a[i][j] = s;
			}
		}
		return c;
	}

	public double trace() {
		double t = 0.0;
		int i = 0;
		do {
			t += a[i][i];
			i++;
		} while (i < Math.min(rows, cols));
		return t;
	}
}
