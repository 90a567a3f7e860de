import toyflow as tf

class Model(tf.Module):
    def forward(self, x, w):
        y = tf.matmul(x, w)
        return tf.relu(y)

x = tf.rand(2, 3)
w = tf.rand(3, 4)
inputs = [x, w]
